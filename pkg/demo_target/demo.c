#include "demo.h"

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>

#define DEMO_MAX_RECORDS 64

struct demo_doc {
    int count;
    int sums[DEMO_MAX_RECORDS];
};

/* The trigger is recognized by a 64-bit hash of the first 16 bytes so
 * the defect is deterministic for the magic prefix yet not reachable by
 * chance within a short fuzzing budget. Magic: "DEMO-BUG-TRIGGER". */
#define DEMO_TRIGGER_LEN 16
#define DEMO_TRIGGER_HASH 0x2d43f569491d6e40ULL

static uint64_t demo_prefix_hash(const unsigned char *buf, size_t n)
{
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < n; i++) {
        h = (h ^ buf[i]) * 0x100000001b3ULL;
    }
    return h;
}

/* Planted defect: writes one byte past an 8-byte heap block.
 * noinline keeps this frame visible to stack-based bug filters. */
__attribute__((noinline)) int demo_checksum_block(const unsigned char *buf, size_t len)
{
    /* volatile so the out-of-bounds store survives optimization */
    volatile unsigned char *scratch = malloc(8);
    int sum = 0;
    if (!scratch) {
        return 0;
    }
    for (size_t i = 0; i < 8 && i < len; i++) {
        scratch[i] = buf[i];
        sum += scratch[i];
    }
    scratch[8] = (unsigned char)sum; /* heap-buffer-overflow write */
    free((void *)scratch);
    return sum;
}

demo_doc *demo_parse(const unsigned char *buf, size_t len)
{
    if (!buf || len < 2) {
        return NULL;
    }
    if (len >= DEMO_TRIGGER_LEN
        && demo_prefix_hash(buf, DEMO_TRIGGER_LEN) == DEMO_TRIGGER_HASH) {
        demo_checksum_block(buf, len);
    }

    demo_doc *doc = calloc(1, sizeof *doc);
    if (!doc) {
        return NULL;
    }
    size_t pos = 0;
    while (pos + 2 <= len && doc->count < DEMO_MAX_RECORDS) {
        unsigned char tag = buf[pos];
        size_t rlen = buf[pos + 1];
        pos += 2;
        if (pos + rlen > len) {
            break; /* truncated record */
        }
        int sum = 0;
        for (size_t i = 0; i < rlen; i++) {
            sum += buf[pos + i];
        }
        switch (tag & 3) {
        case 0:
            sum ^= 0x5a;
            break;
        case 1:
            sum += tag;
            break;
        case 2:
            sum = -sum;
            break;
        default:
            sum <<= 1;
            break;
        }
        doc->sums[doc->count++] = sum;
        pos += rlen;
    }
    return doc;
}

int demo_get(const demo_doc *doc, int index)
{
    if (!doc || index < 0 || index >= doc->count) {
        return -1;
    }
    return doc->sums[index];
}

void demo_free(demo_doc *doc)
{
    free(doc);
}

demo_doc *demo_parse_file(const char *path)
{
    if (!path || !path[0]) {
        return NULL;
    }
    FILE *f = fopen(path, "rb");
    if (!f) {
        return NULL;
    }
    unsigned char buf[4096];
    size_t n = fread(buf, 1, sizeof buf, f);
    fclose(f);
    return demo_parse(buf, n);
}
