#ifndef STNLM_ERRORS_HPP
#define STNLM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stnlm {

// Base of everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

// A numeric or size guard tripped. CLI exit code 4.
class GuardError : public Error {
 public:
  using Error::Error;
};

#define STNLM_DEFINE_ERROR(NAME, BASE)     \
  class NAME : public BASE {               \
   public:                                 \
    using BASE::BASE;                      \
  };

// treebank
STNLM_DEFINE_ERROR(UnbalancedBrackets, DataError)
STNLM_DEFINE_ERROR(EmptyNode, DataError)
STNLM_DEFINE_ERROR(NonBinaryNode, DataError)
STNLM_DEFINE_ERROR(TraceToken, DataError)

// tensor bank
STNLM_DEFINE_ERROR(EmptyCorpus, DataError)
STNLM_DEFINE_ERROR(NonBinaryTree, DataError)
STNLM_DEFINE_ERROR(UnknownCategory, DataError)
STNLM_DEFINE_ERROR(UnknownWord, DataError)
STNLM_DEFINE_ERROR(UnknownShape, DataError)
STNLM_DEFINE_ERROR(FormatVersionMismatch, DataError)
STNLM_DEFINE_ERROR(ChecksumMismatch, DataError)
STNLM_DEFINE_ERROR(IoError, DataError)

// probability model
STNLM_DEFINE_ERROR(MaskedPositionInvalid, DataError)
STNLM_DEFINE_ERROR(NotADistribution, DataError)
STNLM_DEFINE_ERROR(IndexOutOfRange, DataError)

// correlations
STNLM_DEFINE_ERROR(InsufficientPoints, DataError)
STNLM_DEFINE_ERROR(NonPositiveValues, DataError)

// guards
STNLM_DEFINE_ERROR(LimitExceeded, GuardError)
STNLM_DEFINE_ERROR(ZeroPartition, GuardError)
STNLM_DEFINE_ERROR(ZeroWeight, GuardError)
STNLM_DEFINE_ERROR(BlockTooLarge, GuardError)
STNLM_DEFINE_ERROR(EmptyBlock, GuardError)
STNLM_DEFINE_ERROR(NotASubtreeBlock, GuardError)

#undef STNLM_DEFINE_ERROR

}  // namespace stnlm

#endif
