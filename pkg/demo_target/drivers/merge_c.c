/* Merge fixture C: parses with marker prefix 0xC3. */
#include <stdint.h>
#include <stddef.h>
#include <string.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    unsigned char buf_c[72];
    size_t n = size < sizeof buf_c - 1 ? size : sizeof buf_c - 1;
    buf_c[0] = 0xC3;
    memcpy(buf_c + 1, data, n);
    demo_doc *doc = demo_parse(buf_c, n + 1);
    if (doc) {
        demo_free(doc);
    }
    return 0;
}
