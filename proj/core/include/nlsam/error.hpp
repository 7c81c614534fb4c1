#pragma once

#include <stdexcept>
#include <string>

namespace nlsam {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, bad sizeof_hdr, or impossible dimensions in a NIfTI-1 header.
class MalformedHeaderError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDatatypeError : public Error {
 public:
  using Error::Error;
};

/// The data section ends before dims * bytes-per-voxel bytes were read.
class TruncatedDataError : public Error {
 public:
  using Error::Error;
};

/// bvals/bvecs row or column counts disagree with each other or with the volume.
class GradientFormatError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// PIESNO could not identify any pure-noise voxel.
class NoBackgroundError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlsam
