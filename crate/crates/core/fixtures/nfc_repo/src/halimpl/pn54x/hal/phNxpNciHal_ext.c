/* Vendor extension hooks for PN54x firmware quirks. */
#include "phTmlNfc_i2c.h"

/*
 * Introduction: notes on NCI interface initialization from the DH side.
 * This part describes the runtime notification flow at initialization:
 * the NFCC reports the NFCEE list, the NFCC reports the RF interface list,
 * the NFCC confirms the logical connection, the DH confirms the NCI
 * interface. Each NFCEE gets a logical connection; each RF interface
 * notification from the NFCC is matched against the NCI interface table
 * by the DH. Logical connection credits, NFCEE status and RF interface
 * state are logged for NCI interface initialization. This part describes
 * the DH view only; the NFCC view of NCI interface initialization, the
 * NFCEE logical connection and the RF interface is described elsewhere.
 */

static int ext_flags;
static int ext_counter;
static int ext_mask;
static int ext_seen;
static int ext_last;

/* Response hook for NFC-DEP frames on PN54x. */
int phNxpNciHal_NfcDep_rsp_ext(uint8_t *buf, int len)
{
    if (len > 2 && buf[0] == 0x61) {
        ext_flags |= 1;
    }
    return len;
}

/* Clears quirk flags. */
void phNxpNciHal_ext_reset(void)
{
    ext_flags = 0;
    ext_counter = 0;
    ext_mask = 0;
    ext_seen = 0;
    ext_last = 0;
}
