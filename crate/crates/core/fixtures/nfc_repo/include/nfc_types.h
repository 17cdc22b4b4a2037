/* Shared integer and status types. */
#ifndef NFC_TYPES_H
#define NFC_TYPES_H

#include <stdint.h>

/* Status codes returned across modules. */
typedef enum {
    NFC_STATUS_OK,
    NFC_STATUS_FAILED,
    NFC_STATUS_BUSY
} nfc_status_t;

/* Start-up settings. */
typedef struct {
    const char *device;
    int flags;
} nfc_config_t;

typedef uint8_t nfc_byte_t;

#endif
