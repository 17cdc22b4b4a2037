/* Core message encoding: headers, opcodes and status codes. */
#include "nci_msg.h"

/* Encodes a control message header into three bytes. */
int nciCore_EncodeHeader(uint8_t *out, uint8_t gid, uint8_t oid, uint8_t len)
{
    out[0] = (uint8_t)(NCI_MT_CMD | gid);
    out[1] = oid;
    out[2] = len;
    return 3;
}

/* Decodes the status byte of a response. */
int nciCore_Status(const uint8_t *rsp)
{
    return rsp[3];
}
