/* Merge fixture B: parses with marker prefix 0xB2. */
#include <stdint.h>
#include <stddef.h>
#include <string.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    unsigned char buf_b[72];
    size_t n = size < sizeof buf_b - 1 ? size : sizeof buf_b - 1;
    buf_b[0] = 0xB2;
    memcpy(buf_b + 1, data, n);
    demo_doc *doc = demo_parse(buf_b, n + 1);
    if (doc) {
        demo_free(doc);
    }
    return 0;
}
