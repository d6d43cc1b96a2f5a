#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "support.hpp"

namespace testutil {

Bytes hello_vector(std::string_view name) {
    std::ifstream in(APPCAP_HELLO_VECTORS);
    if (!in) throw std::runtime_error("cannot open " APPCAP_HELLO_VECTORS);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string key;
        std::string value;
        fields >> key >> value;
        if (key == name) return hex(value);
    }
    throw std::runtime_error("no hello vector named " + std::string(name));
}

}  // namespace testutil
