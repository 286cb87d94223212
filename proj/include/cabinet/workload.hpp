#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabinet/error.hpp"
#include "cabinet/rng.hpp"

namespace cabinet {

enum class OpKind : std::uint8_t {
  read,
  update,
  scan,
  insert,
  // TPC-C transaction types
  new_order,
  payment,
  order_status,
  delivery,
  stock_level,
};

inline constexpr OpKind kAllOpKinds[] = {OpKind::read,      OpKind::update,  OpKind::scan,
                                         OpKind::insert,    OpKind::new_order, OpKind::payment,
                                         OpKind::order_status, OpKind::delivery, OpKind::stock_level};

constexpr std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::read: return "READ";
    case OpKind::update: return "UPDATE";
    case OpKind::scan: return "SCAN";
    case OpKind::insert: return "INSERT";
    case OpKind::new_order: return "NEW_ORDER";
    case OpKind::payment: return "PAYMENT";
    case OpKind::order_status: return "ORDER_STATUS";
    case OpKind::delivery: return "DELIVERY";
    case OpKind::stock_level: return "STOCK_LEVEL";
  }
  return "?";
}

inline OpKind op_kind_from_string(std::string_view s) {
  for (OpKind k : kAllOpKinds)
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::config_error, "unknown operation kind '" + std::string(s) + "'");
}

/// Relative execution cost of one operation at a follower.
constexpr double op_cost(OpKind k) { return k == OpKind::scan ? 4.0 : 1.0; }

struct Operation {
  OpKind kind = OpKind::read;
  std::uint64_t key = 0;
  std::uint32_t payload_bytes = 0;
};

struct Batch {
  std::uint64_t batch_id = 0;
  std::vector<Operation> operations;

  std::size_t size() const { return operations.size(); }

  double cost() const {
    double c = 0.0;
    for (const auto& op : operations) c += op_cost(op.kind);
    return c;
  }
};

using BatchPtr = std::shared_ptr<const Batch>;

struct OperationMix {
  std::string name;
  std::vector<std::pair<OpKind, double>> ratios;
  std::uint32_t payload_bytes = 100;
  std::uint64_t key_space = 1'000'000;

  void validate() const {
    double sum = 0.0;
    for (const auto& [kind, p] : ratios) {
      if (p < 0.0) throw Error(ErrorCode::config_error, "mix '" + name + "' has a negative ratio");
      sum += p;
    }
    if (ratios.empty() || std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorCode::config_error, "mix '" + name + "' ratios must sum to 1");
    if (payload_bytes == 0) throw Error(ErrorCode::config_error, "mix '" + name + "' payload_bytes must be > 0");
    if (key_space == 0) throw Error(ErrorCode::config_error, "mix '" + name + "' key_space must be > 0");
  }
};

/// Built-in mixes. The YCSB ratios are the standard core-workload defaults;
/// they are editable through the scenario file.
inline OperationMix builtin_mix(std::string_view name) {
  using enum OpKind;
  OperationMix mix;
  mix.name = std::string(name);
  if (name == "A" || name == "F") mix.ratios = {{read, 0.5}, {update, 0.5}};
  else if (name == "B") mix.ratios = {{read, 0.95}, {update, 0.05}};
  else if (name == "C") mix.ratios = {{read, 1.0}};
  else if (name == "D") mix.ratios = {{read, 0.95}, {insert, 0.05}};
  else if (name == "E") mix.ratios = {{scan, 0.95}, {insert, 0.05}};
  else if (name == "tpcc")
    mix.ratios = {{new_order, 0.45}, {payment, 0.43}, {order_status, 0.04}, {delivery, 0.04}, {stock_level, 0.04}};
  else
    throw Error(ErrorCode::config_error, "unknown built-in mix '" + std::string(name) + "'");
  return mix;
}

/// Accepts either a built-in name or {name, ratios: {KIND: p}, payload_bytes, key_space}.
inline OperationMix mix_from_json(const nlohmann::json& j) {
  if (j.is_string()) return builtin_mix(j.get<std::string>());
  try {
    OperationMix mix;
    mix.name = j.value("name", std::string("custom"));
    for (const auto& [kind, p] : j.at("ratios").items()) mix.ratios.emplace_back(op_kind_from_string(kind), p.get<double>());
    mix.payload_bytes = j.value("payload_bytes", 100u);
    mix.key_space = j.value("key_space", std::uint64_t{1'000'000});
    mix.validate();
    return mix;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("bad mix: ") + e.what());
  }
}

/// b operations drawn i.i.d. from the mix.
inline Batch generate_batch(const OperationMix& mix, std::size_t b, Rng& rng, std::uint64_t batch_id = 0) {
  if (b == 0) throw Error(ErrorCode::config_error, "batch size must be >= 1");
  mix.validate();

  Batch batch;
  batch.batch_id = batch_id;
  batch.operations.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double u = rng.uniform01();
    double acc = 0.0;
    OpKind kind = mix.ratios.back().first;
    for (const auto& [k, p] : mix.ratios) {
      acc += p;
      if (u < acc) {
        kind = k;
        break;
      }
    }
    batch.operations.push_back({kind, rng() % mix.key_space, mix.payload_bytes});
  }
  return batch;
}

}  // namespace cabinet
