#ifndef NFCEE_MGR_H
#define NFCEE_MGR_H

#include <stdint.h>

#define NFCEE_MAX 4

/* One row of the NFCEE table. */
struct nfcee_entry {
    uint8_t id;
    int enabled;
};

int nfcee_Discover(void);
int nfcee_ModeSet(uint8_t id, int enable);

#endif
