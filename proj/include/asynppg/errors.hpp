// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace asynppg {

enum class ErrorCode {
    DimensionMismatch,
    NonStronglyConvexAgent,
    ConvergenceFailure,
    NonPositiveStep,
    EmptyBox,
    BracketNotConvex,
    InvalidFraction,
    DelayBoundViolated,
    ScheduleInvalid,
    NonFiniteState,
    MissingSaddleData,
    InfeasibleQSchedule,
    QBelowLipschitz,
    NoMarketClearing,
    MaxIterExceeded,
    ResidualTooLarge,
    DisconnectedGraph,
    ParseError,
    ConstraintViolation,
    InvalidConfig,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonStronglyConvexAgent: return "NonStronglyConvexAgent";
        case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorCode::NonPositiveStep: return "NonPositiveStep";
        case ErrorCode::EmptyBox: return "EmptyBox";
        case ErrorCode::BracketNotConvex: return "BracketNotConvex";
        case ErrorCode::InvalidFraction: return "InvalidFraction";
        case ErrorCode::DelayBoundViolated: return "DelayBoundViolated";
        case ErrorCode::ScheduleInvalid: return "ScheduleInvalid";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::MissingSaddleData: return "MissingSaddleData";
        case ErrorCode::InfeasibleQSchedule: return "InfeasibleQSchedule";
        case ErrorCode::QBelowLipschitz: return "QBelowLipschitz";
        case ErrorCode::NoMarketClearing: return "NoMarketClearing";
        case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
        case ErrorCode::ResidualTooLarge: return "ResidualTooLarge";
        case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConstraintViolation: return "ConstraintViolation";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace asynppg
