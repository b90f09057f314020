#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace std {

template <typename T>
ostream& operator<<(ostream& os, const vector<T>& v) {
    os << '[';
    for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    return os << ']';
}

} // namespace std
