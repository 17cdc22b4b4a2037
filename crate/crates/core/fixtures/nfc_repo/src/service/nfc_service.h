/* Public service API. */
#ifndef NFC_SERVICE_H
#define NFC_SERVICE_H

#include "nfc_types.h"

/* Service states. */
typedef enum {
    NFC_STATE_OFF,
    NFC_STATE_ON,
    NFC_STATE_ERROR
} nfc_state_t;

int nfcService_Init(const nfc_config_t *cfg);
void nfcService_Shutdown(void);
nfc_state_t nfcService_GetState(void);

#endif
