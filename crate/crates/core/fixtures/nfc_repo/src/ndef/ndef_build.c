/* Serialization into byte buffers. */
#include "ndef.h"

/* Writes one record into a buffer. */
size_t ndef_WriteRecord(const ndef_record_t *rec, uint8_t *out)
{
    out[0] = rec->tnf;
    return 1 + rec->payload_len;
}
