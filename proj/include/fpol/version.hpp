#ifndef FPOL_VERSION_HPP
#define FPOL_VERSION_HPP

#define FPOL_VERSION "0.1.0"

#endif
