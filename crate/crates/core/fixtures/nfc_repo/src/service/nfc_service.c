/*
 * NFC service initialization over the NCI interface.
 *
 * Owns the service state machine. Everything below the service talks to
 * the controller through the HAL.
 */
#include "nfc_service.h"
#include "nfc_types.h"

/* Time allowed for NCI interface initialization by the NFCC, in ms. */
#define NCI_INIT_TIMEOUT 1500

static nfc_state_t g_state = NFC_STATE_OFF;

/* Initialization entry point: the DH opens the NFCC transport. */
int nfcService_Init(const nfc_config_t *cfg)
{
    if (g_state != NFC_STATE_OFF) {
        return NFC_STATUS_BUSY;
    }
    if (phTmlNfc_I2COpen(cfg->device) != 0) {
        return NFC_STATUS_FAILED;
    }
    if (phNxpNciHal_open(NCI_INIT_TIMEOUT) != 0) {
        phTmlNfc_I2CClose();
        return NFC_STATUS_FAILED;
    }
    g_state = NFC_STATE_ON;
    return NFC_STATUS_OK;
}

/* Tears the service down and releases the transport. */
void nfcService_Shutdown(void)
{
    phNxpNciHal_close();
    phTmlNfc_I2CClose();
    g_state = NFC_STATE_OFF;
}

/* Current service state. */
nfc_state_t nfcService_GetState(void)
{
    return g_state;
}
