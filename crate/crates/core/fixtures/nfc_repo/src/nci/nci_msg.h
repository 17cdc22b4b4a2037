/* Message type constants and packet header layout. */
#ifndef NCI_MSG_H
#define NCI_MSG_H

#include <stdint.h>

#define NCI_MT_DATA 0x00
#define NCI_MT_CMD 0x20
#define NCI_MT_RSP 0x40
#define NCI_MT_NTF 0x60

/* Header of a data packet. */
struct nci_data_hdr {
    uint8_t conn_id;
    uint8_t rfu;
    uint8_t len;
};

int nciCore_EncodeHeader(uint8_t *out, uint8_t gid, uint8_t oid, uint8_t len);

#endif
