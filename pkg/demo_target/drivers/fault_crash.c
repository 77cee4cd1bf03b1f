/* Ineffective fixture: crashes inside driver-owned code immediately. */
#include <stdint.h>
#include <stddef.h>

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    (void)data;
    (void)size;
    volatile int *p = 0;
    *p = 1; /* null dereference in the driver itself */
    return 0;
}
