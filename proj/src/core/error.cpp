#include "ringkit/error.hpp"

namespace ringkit {

void throw_invalid(const std::string& what) { throw Error(ErrorKind::kInvalidArgument, what); }
void throw_io(const std::string& what) { throw Error(ErrorKind::kIo, what); }
void throw_numeric(const std::string& what) { throw Error(ErrorKind::kNumeric, what); }
void throw_config(const std::string& what) { throw Error(ErrorKind::kConfig, what); }

}  // namespace ringkit
