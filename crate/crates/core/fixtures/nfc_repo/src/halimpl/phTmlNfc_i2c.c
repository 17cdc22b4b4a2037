/*
 * Transport mapping for the NCI interface over I2C: opens the NFCC at
 * initialization, bus read and write with retry.
 */
#include <fcntl.h>
#include <unistd.h>
#include "phTmlNfc_i2c.h"

/* Delay before an I2C read retry when the NFCC holds the bus, in ms. */
#define I2C_RETRY_DELAY_MS 5

/* Guard delay after each I2C write, in microseconds. */
#define I2C_WRITE_GUARD_US 500

static int g_fd = -1;

/* Opens the NFCC device node so the NCI interface can run during
 * initialization. */
int phTmlNfc_I2COpen(const char *device)
{
    g_fd = open(device, O_RDWR);
    return g_fd < 0 ? -1 : 0;
}

/* Read of one frame from the I2C bus with retry while the NFCC holds the bus. */
int phTmlNfc_I2CRead(uint8_t *buf, int len)
{
    int n;
    while ((n = read(g_fd, buf, len)) < 0) {
        usleep(I2C_RETRY_DELAY_MS * 1000);
    }
    return n;
}

/* Write of one frame to the I2C bus followed by the guard delay. */
int phTmlNfc_I2CWrite(const uint8_t *buf, int len)
{
    int n = write(g_fd, buf, len);
    usleep(I2C_WRITE_GUARD_US);
    return n;
}

/* Closes the device node. */
void phTmlNfc_I2CClose(void)
{
    if (g_fd >= 0) {
        close(g_fd);
        g_fd = -1;
    }
}
