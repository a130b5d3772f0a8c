// SPDX-License-Identifier: Apache-2.0
//
// slp-mimo: symbol-level precoding and MLD receivers for MU-MIMO downlink
// Copyright (C) 2026 The slp-mimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef SLP_COMMON_HPP
#define SLP_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace slp
{
    using cplx = std::complex<double>;

    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using CRowVector = Eigen::RowVectorXcd;
    using RMatrix = Eigen::MatrixXd;
    using RVector = Eigen::VectorXd;
    using Index = Eigen::Index;

    // Error taxonomy. The CLI maps ConfigError to exit code 2 and NumericError
    // (and its subclasses) to exit code 3.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    class ContractError : public Error
    {
    public:
        using Error::Error;
    };

    class InvalidSymbolError : public Error
    {
    public:
        using Error::Error;
    };

    class IoError : public Error
    {
    public:
        IoError(const std::string &what, std::string path) : Error(what + ": " + path), path_(std::move(path)) {}
        const std::string &path() const noexcept { return path_; }

    private:
        std::string path_;
    };

    class BudgetError : public Error
    {
    public:
        using Error::Error;
    };

    class NumericError : public Error
    {
    public:
        using Error::Error;
    };

    class DegenerateChannelError : public NumericError
    {
    public:
        using NumericError::NumericError;
    };

    class InfeasibleError : public NumericError
    {
    public:
        InfeasibleError(const std::string &what, Index row) : NumericError(what + " (row " + std::to_string(row) + ")"), row_(row) {}
        Index row() const noexcept { return row_; }

    private:
        Index row_;
    };

    class ConvergenceError : public NumericError
    {
    public:
        ConvergenceError(const std::string &what, std::vector<double> trace) : NumericError(what), trace_(std::move(trace)) {}
        const std::vector<double> &trace() const noexcept { return trace_; }

    private:
        std::vector<double> trace_;
    };

    template <typename Derived>
    bool all_finite(const Eigen::MatrixBase<Derived> &m)
    {
        return m.allFinite();
    }

} // namespace slp

#endif
