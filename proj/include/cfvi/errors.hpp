/*
 Copyright 2026 The cfvi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfvi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Action or state outside the domain of a cost or model.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A model produced a non-finite quantity for a finite input.
class ModelError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, Eigen::VectorXd state)
      : Error(what), state_(std::move(state)) {}
  const Eigen::VectorXd& state() const { return state_; }

 private:
  Eigen::VectorXd state_;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfvi
