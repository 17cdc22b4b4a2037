/* NDEF message model. */
#ifndef NDEF_H
#define NDEF_H

#include <stddef.h>
#include <stdint.h>

/* Flag bit of a short record. */
#define NDEF_FLAG_SR 0x10

/* One record of a message. */
typedef struct {
    uint8_t tnf;
    const uint8_t *type;
    const uint8_t *payload;
    size_t payload_len;
} ndef_record_t;

/* A parsed message. */
typedef struct {
    ndef_record_t records[8];
    int count;
} ndef_msg_t;

int ndef_ParseRecord(const uint8_t *buf, size_t len, ndef_record_t *out);

#endif
