#ifndef KAM_ERRORS_HPP_
#define KAM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace kam
{

/// Base class of every error raised by the engine.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions or malformed containers.
class StructuralError : public Error
{
public:
  using Error::Error;
};

/// Invalid options, grids too small, missing weights, malformed files.
class ConfigurationError : public Error
{
public:
  using Error::Error;
};

/// An operation was called outside its domain (nonzero mean, wrong support...).
class PreconditionError : public Error
{
public:
  using Error::Error;
};

/// A probed divisor <k, omega> vanished to working precision.
class ResonanceError : public Error
{
public:
  ResonanceError(const std::string& what, std::string index)
      : Error(what), index_(std::move(index))
  {
  }
  const std::string& index() const { return index_; }

private:
  std::string index_;
};

/// An extremum was requested over an empty index set.
class EmptyDomainError : public Error
{
public:
  using Error::Error;
};

/// Neumann inversion requested with |D - Id|_s >= 1.
class NonInvertibleError : public Error
{
public:
  NonInvertibleError(const std::string& what, double mu) : Error(what), mu_(mu) {}
  double mu() const { return mu_; }

private:
  double mu_;
};

/// A smallness condition of a KAM step (or the a-priori gate) was violated.
class StepPreconditionError : public Error
{
public:
  StepPreconditionError(const std::string& what, int nu, std::string bound, double lhs,
                        double rhs)
      : Error(what), nu_(nu), bound_(std::move(bound)), lhs_(lhs), rhs_(rhs)
  {
  }
  int nu() const { return nu_; }
  const std::string& bound() const { return bound_; }
  double lhs() const { return lhs_; }
  double rhs() const { return rhs_; }
  void set_nu(int nu) { nu_ = nu; }

private:
  int nu_;
  std::string bound_;
  double lhs_;
  double rhs_;
};

/// The fixed-point map failed to converge within the iteration budget.
class DivergenceError : public Error
{
public:
  DivergenceError(const std::string& what, int nu = -1) : Error(what), nu_(nu) {}
  int nu() const { return nu_; }
  void set_nu(int nu) { nu_ = nu; }

private:
  int nu_;
};

class IntegratorError : public Error
{
public:
  using Error::Error;
};

} // namespace kam

#endif
