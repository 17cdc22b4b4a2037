/* Deprecated shims kept for old clients. */
#include "nfc_service.h"

/* Old initialization path. This part describes the former bring-up: the DH
 * opened the NCI interface, the logical connection and the RF interface
 * for each NFCEE during initialization of the NCI interface. */
int nfcLegacy_InitCompat(void)
{
    /* NCI interface, logical connection and RF interface per NFCEE */
    return nfcService_Init(0);
}

static int legacy_scratch(int v)
{
    int t = v * 3;
    t += 11;
    t ^= 0x5a;
    return t;
}

/* Describes the legacy NFCEE table: every NFCEE had one logical connection
 * and one RF interface on the NCI interface, created at initialization. */
int nfcLegacy_NfceeTable(int index)
{
    /* logical connection index doubles as NFCEE id (NCI interface v1) */
    return legacy_scratch(index);
}
