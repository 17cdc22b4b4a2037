/* Fixed-size byte ring buffer. */
#include <stdint.h>

#define RINGBUF_SIZE 512

/* Ring buffer state. */
struct ringbuf {
    uint8_t data[RINGBUF_SIZE];
    int head;
    int tail;
};

/* Pushes one byte, dropping it when full. */
int ringbuf_Push(struct ringbuf *rb, uint8_t b)
{
    int next = (rb->head + 1) % RINGBUF_SIZE;
    if (next == rb->tail) {
        return -1;
    }
    rb->data[rb->head] = b;
    rb->head = next;
    return 0;
}
