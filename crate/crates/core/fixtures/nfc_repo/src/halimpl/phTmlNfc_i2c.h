#ifndef PHTMLNFC_I2C_H
#define PHTMLNFC_I2C_H

#include <stdint.h>

int phTmlNfc_I2COpen(const char *device);
int phTmlNfc_I2CRead(uint8_t *buf, int len);
int phTmlNfc_I2CWrite(const uint8_t *buf, int len);
void phTmlNfc_I2CClose(void);

#endif
