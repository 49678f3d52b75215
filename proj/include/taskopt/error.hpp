#pragma once

#include <stdexcept>
#include <string>

namespace taskopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible, or an input has the wrong size.
class ShapeError : public Error
{
public:
  using Error::Error;
};

/// A name was registered twice within one namespace.
class DuplicateNameError : public Error
{
public:
  using Error::Error;
};

/// A name, link, model, or binding could not be found.
class LookupError : public Error
{
public:
  using Error::Error;
};

/// An argument is outside of its documented domain.
class ValueError : public Error
{
public:
  using Error::Error;
};

/// The requested operation does not apply to the given expression or problem.
class StructureError : public Error
{
public:
  using Error::Error;
};

/// A solver session was misused, or an algorithm does not accept the problem.
class SolverError : public Error
{
public:
  using Error::Error;
};

}  // namespace taskopt
