#include "lsalsa/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <string>

namespace lsalsa {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ISTA: return "ISTA";
    case Method::FISTA: return "FISTA";
    case Method::SALSA: return "SALSA";
    case Method::LISTA: return "LISTA";
    case Method::LSALSA: return "LSALSA";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto m : {Method::ISTA, Method::FISTA, Method::SALSA, Method::LISTA, Method::LSALSA})
    if (method_name(m) == upper) return m;
  fail(ErrorCode::UnknownMethod, "unknown method '" + std::string(name) + "'");
}

Encoder Encoder::iterative(Method method, ConcatDictionary dict, SolverConfig config) {
  require(!is_learned(method), ErrorCode::UnknownMethod,
          std::string(method_name(method)) + " is not an iterative solver");
  config.validate(dict.components());
  const auto start = std::chrono::steady_clock::now();
  Encoder e;
  e.method_ = method;
  e.depth_ = config.max_iters;
  if (method == Method::SALSA) {
    e.splitting_ = build_splitting_operator(dict, config.mu);
  } else if (!config.lipschitz) {
    config.lipschitz = estimate_lipschitz(dict.matrix());
  }
  e.config_ = std::move(config);
  e.dict_ = std::move(dict);
  e.setup_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

Encoder Encoder::lsalsa(LsalsaParams params) {
  params.validate();
  Encoder e;
  e.method_ = Method::LSALSA;
  e.depth_ = params.depth;
  e.lsalsa_ = std::move(params);
  return e;
}

Encoder Encoder::lista(ListaParams params) {
  params.validate();
  Encoder e;
  e.method_ = Method::LISTA;
  e.depth_ = params.depth;
  e.lista_ = std::move(params);
  return e;
}

Encoder Encoder::from_bundle(Method method, const ModelBundle& bundle) {
  switch (method) {
    case Method::LSALSA:
      require(bundle.lsalsa.has_value(), ErrorCode::MissingParameter, "LSALSA needs trained parameters");
      return lsalsa(*bundle.lsalsa);
    case Method::LISTA:
      require(bundle.lista.has_value(), ErrorCode::MissingParameter, "LISTA needs trained parameters");
      return lista(*bundle.lista);
    default:
      require(bundle.dict.has_value(), ErrorCode::MissingParameter,
              std::string(method_name(method)) + " needs a dictionary");
      require(bundle.config.has_value(), ErrorCode::MissingParameter,
              std::string(method_name(method)) + " needs a solver config");
      return iterative(method, *bundle.dict, *bundle.config);
  }
}

ComponentCode Encoder::encode(const Vector& signal) const {
  const TraceOptions quiet{.record = false};
  switch (method_) {
    case Method::ISTA: return ista(Signal(signal), *dict_, config_, quiet).code;
    case Method::FISTA: return fista(Signal(signal), *dict_, config_, quiet).code;
    case Method::SALSA: return salsa(Signal(signal), *dict_, config_, &splitting_, quiet).code;
    case Method::LSALSA: return lsalsa_forward(*lsalsa_, signal);
    case Method::LISTA: return lista_forward(*lista_, signal);
  }
  fail(ErrorCode::UnknownMethod, "unhandled method");
}

ComponentCode dispatch_encode(Method method, const Signal& signal, const ModelBundle& bundle) {
  return Encoder::from_bundle(method, bundle).encode(signal.data);
}

}  // namespace lsalsa
