#ifndef SSDDR_VERSION_HPP
#define SSDDR_VERSION_HPP

#define SSDDR_VERSION "0.1.0"

#endif
