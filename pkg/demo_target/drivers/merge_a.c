/* Merge fixture A: parses with marker prefix 0xA1 so hook events show
 * which merged branch ran. */
#include <stdint.h>
#include <stddef.h>
#include <string.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    unsigned char buf_a[72];
    size_t n = size < sizeof buf_a - 1 ? size : sizeof buf_a - 1;
    buf_a[0] = 0xA1;
    memcpy(buf_a + 1, data, n);
    demo_doc *doc = demo_parse(buf_a, n + 1);
    if (doc) {
        demo_free(doc);
    }
    return 0;
}
