/* Reference effective driver: forwards fuzz bytes to the parser. */
#include <stdint.h>
#include <stddef.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    demo_doc *doc = demo_parse(data, size);
    if (doc) {
        demo_get(doc, 0);
        demo_free(doc);
    }
    return 0;
}
