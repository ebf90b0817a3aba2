#pragma once

#include "vmtu/ad/tape.hpp"

#include <string>

namespace vmtu::ad {

enum class LossKind { Bce, L2, Hinge };

std::string to_string(LossKind kind);
/// "bce", "l2" or "hinge"; throws InvalidArgument otherwise.
LossKind loss_from_string(const std::string& name);

inline constexpr double kBceClamp = 1e-7;

/// -mean[t log p + (1-t) log(1-p)] with p clamped to [1e-7, 1-1e-7].
Var bce(Tape& tape, Var pred, Var target);
/// mean (p - t)^2
Var l2(Tape& tape, Var pred, Var target);
/// mean max(0, 1 - (2t-1)(2p-1))
Var hinge(Tape& tape, Var pred, Var target);

Var loss(Tape& tape, LossKind kind, Var pred, Var target);

}  // namespace vmtu::ad
