#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace pilqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Offset bookkeeping for stacking per-agent vectors into one joint vector.
struct JointLayout {
  std::vector<int> state_offset;
  std::vector<int> input_offset;
  std::vector<int> state_dim;
  std::vector<int> input_dim;

  JointLayout() = default;
  JointLayout(std::vector<int> state_dims, std::vector<int> input_dims)
      : state_dim(std::move(state_dims)), input_dim(std::move(input_dims)) {
    if (state_dim.size() != input_dim.size()) {
      throw std::invalid_argument("JointLayout: dimension lists disagree");
    }
    int sx = 0;
    int su = 0;
    for (std::size_t i = 0; i < state_dim.size(); ++i) {
      state_offset.push_back(sx);
      input_offset.push_back(su);
      sx += state_dim[i];
      su += input_dim[i];
    }
    total_state_ = sx;
    total_input_ = su;
  }

  int num_agents() const { return static_cast<int>(state_dim.size()); }
  int total_state() const { return total_state_; }
  int total_input() const { return total_input_; }

 private:
  int total_state_ = 0;
  int total_input_ = 0;
};

/// Stacked per-agent state vector. Angles are stored unwrapped; wrapping is
/// applied inside cost evaluation only.
struct JointState {
  VectorXd values;
  std::vector<int> offsets;  // start index of each agent block, first is 0

  JointState() = default;
  JointState(VectorXd v, std::vector<int> offs)
      : values(std::move(v)), offsets(std::move(offs)) {}

  int num_agents() const { return static_cast<int>(offsets.size()); }

  int block_dim(int i) const {
    const int end = (i + 1 < num_agents()) ? offsets[i + 1]
                                           : static_cast<int>(values.size());
    return end - offsets[i];
  }

  Eigen::VectorBlock<VectorXd> agent(int i) {
    return values.segment(offsets[i], block_dim(i));
  }
  Eigen::VectorBlock<const VectorXd> agent(int i) const {
    return values.segment(offsets[i], block_dim(i));
  }
};

/// Stacked per-agent control vector.
struct JointControl {
  VectorXd values;
  std::vector<int> offsets;

  JointControl() = default;
  JointControl(VectorXd v, std::vector<int> offs)
      : values(std::move(v)), offsets(std::move(offs)) {}

  int num_agents() const { return static_cast<int>(offsets.size()); }

  int block_dim(int i) const {
    const int end = (i + 1 < num_agents()) ? offsets[i + 1]
                                           : static_cast<int>(values.size());
    return end - offsets[i];
  }

  Eigen::VectorBlock<VectorXd> agent(int i) {
    return values.segment(offsets[i], block_dim(i));
  }
  Eigen::VectorBlock<const VectorXd> agent(int i) const {
    return values.segment(offsets[i], block_dim(i));
  }
};

inline JointState make_joint_state(const JointLayout& layout, VectorXd v) {
  if (v.size() != layout.total_state()) {
    throw std::invalid_argument("make_joint_state: size mismatch");
  }
  return JointState(std::move(v), layout.state_offset);
}

inline JointControl make_joint_control(const JointLayout& layout, VectorXd v) {
  if (v.size() != layout.total_input()) {
    throw std::invalid_argument("make_joint_control: size mismatch");
  }
  return JointControl(std::move(v), layout.input_offset);
}

}  // namespace pilqr
