/* Semantically wrong fixture: feeds fuzz bytes to the file API as a
 * file *name* instead of file content. */
#include <stdint.h>
#include <stddef.h>
#include <string.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    char name[65];
    size_t n = size < sizeof name - 1 ? size : sizeof name - 1;
    memcpy(name, data, n);
    name[n] = '\0';
    demo_doc *doc = demo_parse_file(name);
    if (doc) {
        demo_free(doc);
    }
    return 0;
}
