/* Minimal C consumer of libsprint_ffi.
 *
 * Build (from the workspace root, after `cargo build -p sprint-ffi`):
 *   gcc -o smoke crates/ffi/examples/smoke.c \
 *       -Icrates/ffi/include target/debug/libsprint_ffi.a -lpthread -ldl -lm
 */

#include <assert.h>
#include <stdio.h>
#include <string.h>

#include "sprint.h"

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s <segment-dir>\n", argv[0]);
        return 2;
    }

    SprintIndex *idx = sprint_index_open(argv[1]);
    if (idx == NULL) {
        fprintf(stderr, "open failed: %s\n", sprint_last_error());
        return 1;
    }
    printf("docs: %lld, vocab: %lld\n",
           (long long)sprint_index_num_docs(idx),
           (long long)sprint_index_vocab_size(idx));

    char *hits = sprint_search_impact(idx, "{\"apple\": 2, \"banana\": 1}", 10);
    if (hits != NULL) {
        printf("impact hits: %s\n", hits);
        sprint_string_free(hits);
    } else {
        printf("impact search failed: %s\n", sprint_last_error());
    }

    sprint_index_close(idx);
    return 0;
}
