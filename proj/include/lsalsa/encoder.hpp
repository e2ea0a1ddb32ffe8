#pragma once

#include <optional>
#include <string_view>

#include "lsalsa/solvers.hpp"
#include "lsalsa/unrolled.hpp"

namespace lsalsa {

enum class Method { ISTA, FISTA, SALSA, LISTA, LSALSA };

std::string_view method_name(Method m);
/// Case-insensitive; throws UnknownMethod.
Method parse_method(std::string_view name);
inline bool is_learned(Method m) { return m == Method::LISTA || m == Method::LSALSA; }

/// Whatever a method might need. Iterative methods read `dict` + `config`;
/// learned methods read their parameter set.
struct ModelBundle {
  std::optional<ConcatDictionary> dict;
  std::optional<SolverConfig> config;
  std::optional<LsalsaParams> lsalsa;
  std::optional<ListaParams> lista;
};

/// An encoder with its one-time setup (splitting operator, Lipschitz constant)
/// already done, so `encode` measures inference only.
class Encoder {
 public:
  static Encoder iterative(Method method, ConcatDictionary dict, SolverConfig config);
  static Encoder lsalsa(LsalsaParams params);
  static Encoder lista(ListaParams params);
  static Encoder from_bundle(Method method, const ModelBundle& bundle);

  ComponentCode encode(const Vector& signal) const;

  Method method() const { return method_; }
  int depth() const { return depth_; }
  double setup_seconds() const { return setup_seconds_; }

 private:
  Encoder() = default;

  Method method_ = Method::SALSA;
  int depth_ = 1;
  double setup_seconds_ = 0.0;
  std::optional<ConcatDictionary> dict_;
  SolverConfig config_;
  Matrix splitting_;
  std::optional<LsalsaParams> lsalsa_;
  std::optional<ListaParams> lista_;
};

ComponentCode dispatch_encode(Method method, const Signal& signal, const ModelBundle& bundle);

}  // namespace lsalsa
