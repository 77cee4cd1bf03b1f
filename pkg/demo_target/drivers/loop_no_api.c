/* Behaviorally busy but semantically empty: shows coverage progress
 * without ever calling the target API. */
#include <stdint.h>
#include <stddef.h>

static unsigned counts[256];
static unsigned long total;

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    if (size == 0) {
        return 0;
    }
    if (data[0] == 'A') {
        total += 7;
    }
    for (size_t i = 0; i < size; i++) {
        counts[data[i]]++;
        if (counts[data[i]] == 1000000) {
            total++;
        }
    }
    return 0;
}
