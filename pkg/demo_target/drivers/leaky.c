/* Ineffective fixture: parses but never releases the document. */
#include <stdint.h>
#include <stddef.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    demo_doc *doc = demo_parse(data, size);
    if (doc) {
        demo_get(doc, 0);
    }
    return 0; /* doc leaks */
}
