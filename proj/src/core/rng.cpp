#include "sf/core/rng.h"

#include "sf/core/error.h"

#include <sstream>

namespace sf {

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state(const std::string &s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail())
        fail(ErrorKind::Corrupt, "checkpoint corrupt: bad rng state");
}

} // namespace sf
