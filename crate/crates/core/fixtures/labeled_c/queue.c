// Fixed-size command queue.
#include "regs.h"

#define QUEUE_DEPTH 8
#if QUEUE_DEPTH > 16
#error "queue too deep"
#endif

typedef struct {
    flash_cmd_t items[QUEUE_DEPTH];
    unsigned head, tail;
} cmd_queue_t;

enum { QUEUE_OK, QUEUE_FULL, QUEUE_EMPTY };

static cmd_queue_t q;

int queue_push(const flash_cmd_t *cmd)
{
    unsigned next = (q.tail + 1) % QUEUE_DEPTH;
    if (next == q.head) {
        return QUEUE_FULL;
    }
    q.items[q.tail] = *cmd;
    q.tail = next;
    return QUEUE_OK;
}

int queue_pop(flash_cmd_t *out)
{
    if (q.head == q.tail) {
        return QUEUE_EMPTY;
    }
    *out = q.items[q.head];
    q.head = (q.head + 1) % QUEUE_DEPTH;
    return QUEUE_OK;
}

unsigned queue_len(void) { return (q.tail + QUEUE_DEPTH - q.head) % QUEUE_DEPTH; }
