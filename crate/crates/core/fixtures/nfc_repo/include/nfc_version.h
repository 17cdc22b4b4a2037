/* Version stamp. */
#ifndef NFC_VERSION_H
#define NFC_VERSION_H

#define NFC_VERSION_MAJOR 2
#define NFC_VERSION_MINOR 7

#endif
