/* Register map for a small SPI flash controller. */
#ifndef REGS_H
#define REGS_H

#include <stdint.h>

#define REG_BASE        0x40002000u
#define REG_CTRL        (REG_BASE + 0x00)
#define REG_STATUS      (REG_BASE + 0x04)
#define REG_OFFSET(n)   ((n) * 4u)
#define STATUS_BUSY(s)  \
    (((s) & 0x1u) != 0)

typedef uint32_t reg_t;

typedef enum {
    FLASH_IDLE = 0,
    FLASH_READ,
    FLASH_PROGRAM,
    FLASH_ERASE
} flash_state_t;

enum spi_mode {
    SPI_MODE0,
    SPI_MODE3 = 3
};

struct flash_geometry {
    uint32_t page_size;
    uint32_t sector_size;
    uint32_t sectors;
};

typedef struct flash_cmd {
    uint8_t opcode;
    uint8_t addr_bytes;
} flash_cmd_t;

typedef void (*flash_done_cb)(int status);

extern const uint32_t FLASH_TIMEOUT_MS;

int flash_init(const struct flash_geometry *geo);
int flash_read(uint32_t addr, uint8_t *buf, uint32_t len);

#endif /* REGS_H */
