/* Correct file-API usage: fuzz bytes become the file's content. */
#include <stdint.h>
#include <stddef.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>
#include "demo.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    char path[] = "/tmp/demo_input_XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) {
        return 0;
    }
    ssize_t written = write(fd, data, size);
    close(fd);
    if (written == (ssize_t)size) {
        demo_doc *doc = demo_parse_file(path);
        if (doc) {
            demo_get(doc, 0);
            demo_free(doc);
        }
    }
    unlink(path);
    return 0;
}
