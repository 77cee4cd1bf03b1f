#ifndef DEMO_H
#define DEMO_H

#include <stddef.h>

/* Tiny record-stream parser used as a fuzzing target.
 *
 * Input format: a sequence of [tag:1][len:1][payload:len] records.
 * Trailing bytes that do not form a complete record are ignored.
 */

typedef struct demo_doc demo_doc;

/* Parse a record stream; returns NULL for NULL/short input. */
demo_doc *demo_parse(const unsigned char *buf, size_t len);

/* Checksum of record `index`, or -1 when out of range. */
int demo_get(const demo_doc *doc, int index);

void demo_free(demo_doc *doc);

/* Parse the contents (not the name) of a file. NULL if unreadable. */
demo_doc *demo_parse_file(const char *path);

#endif /* DEMO_H */
