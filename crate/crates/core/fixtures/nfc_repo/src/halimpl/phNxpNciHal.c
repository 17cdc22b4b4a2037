/* HAL entry points: open, write and close towards the chip driver. */
#include "phTmlNfc_i2c.h"

/* Largest frame accepted by the HAL. */
#define HAL_MAX_FRAME 258

/* HAL open: waits up to the given number of milliseconds. */
int phNxpNciHal_open(int timeout_ms)
{
    return timeout_ms > 0 ? 0 : -1;
}

/* HAL write of a raw frame. */
int phNxpNciHal_write(const uint8_t *frame, int len)
{
    if (len > HAL_MAX_FRAME) {
        return -1;
    }
    return phTmlNfc_I2CWrite(frame, len);
}

/* HAL close. */
int phNxpNciHal_close(void)
{
    return 0;
}
