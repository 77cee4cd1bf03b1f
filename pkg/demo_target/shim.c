/* Link-time interposition shim for semantic probing.
 *
 * Build drivers with -Wl,--wrap=<api> so calls land in __wrap_<api>,
 * which records an event and forwards to the real implementation.
 * Events go to the file named by the DEMO_HOOK_EVENTS environment
 * variable, one line each:
 *
 *     CALL <api>
 *     ARG <api> <index> <hex bytes or ->
 *     FILE <api> <index> <hex path or -> <hex content or ->
 *
 * Byte snapshots are capped at 64 bytes. Logging failures never change
 * target behavior: wrappers always forward.
 */

#include "demo.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define SNAPSHOT_CAP 64

extern demo_doc *__real_demo_parse(const unsigned char *buf, size_t len);
extern demo_doc *__real_demo_parse_file(const char *path);
extern int __real_demo_get(const demo_doc *doc, int index);

static FILE *hook_out(void)
{
    static FILE *out;
    static int tried;
    if (!tried) {
        tried = 1;
        const char *path = getenv("DEMO_HOOK_EVENTS");
        if (path && path[0]) {
            out = fopen(path, "a");
        }
    }
    return out;
}

/* Create the event file up front so an empty file means "channel open,
 * no events" rather than "channel broken". */
__attribute__((constructor)) static void hook_init(void)
{
    FILE *out = hook_out();
    if (out) {
        fflush(out);
    }
}

static void emit_hex(FILE *out, const unsigned char *p, size_t n)
{
    if (!p || n == 0) {
        fputc('-', out);
        return;
    }
    size_t cap = n < SNAPSHOT_CAP ? n : SNAPSHOT_CAP;
    for (size_t i = 0; i < cap; i++) {
        fprintf(out, "%02x", p[i]);
    }
}

demo_doc *__wrap_demo_parse(const unsigned char *buf, size_t len)
{
    FILE *out = hook_out();
    if (out) {
        fprintf(out, "CALL demo_parse\n");
        fprintf(out, "ARG demo_parse 0 ");
        emit_hex(out, buf, len);
        fputc('\n', out);
        fflush(out);
    }
    return __real_demo_parse(buf, len);
}

demo_doc *__wrap_demo_parse_file(const char *path)
{
    FILE *out = hook_out();
    if (out) {
        unsigned char content[SNAPSHOT_CAP];
        size_t n = 0;
        if (path && path[0]) {
            FILE *in = fopen(path, "rb");
            if (in) {
                n = fread(content, 1, sizeof content, in);
                fclose(in);
            }
        }
        fprintf(out, "CALL demo_parse_file\n");
        fprintf(out, "FILE demo_parse_file 0 ");
        emit_hex(out, (const unsigned char *)path, path ? strlen(path) : 0);
        fputc(' ', out);
        emit_hex(out, content, n);
        fputc('\n', out);
        fflush(out);
    }
    return __real_demo_parse_file(path);
}

int __wrap_demo_get(const demo_doc *doc, int index)
{
    FILE *out = hook_out();
    if (out) {
        fprintf(out, "CALL demo_get\n");
        fflush(out);
    }
    return __real_demo_get(doc, index);
}
