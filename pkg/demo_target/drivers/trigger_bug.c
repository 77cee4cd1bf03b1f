/* Fixture that deterministically reaches the library's planted defect
 * by prefixing every input with the trigger magic. */
#include <stdint.h>
#include <stddef.h>
#include <string.h>
#include "demo.h"

static const unsigned char magic[16] = "DEMO-BUG-TRIGGER";

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    unsigned char buf[64];
    size_t n = size < sizeof buf - sizeof magic ? size : sizeof buf - sizeof magic;
    memcpy(buf, magic, sizeof magic);
    memcpy(buf + sizeof magic, data, n);
    demo_doc *doc = demo_parse(buf, sizeof magic + n);
    if (doc) {
        demo_free(doc);
    }
    return 0;
}
