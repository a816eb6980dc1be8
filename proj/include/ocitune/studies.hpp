#pragma once

#include "ocitune/experiment.hpp"

namespace ocitune::studies {

/// 2x2 plant with a non-minimum-phase transmission zero at q = 1.2, output
/// direction [-0.6, 0.8].
TransferMatrix example_plant();

/// Td = diag(-0.4(q-1.2)/((q-0.6)(q-0.8))) repeated on both outputs; its
/// ideal controller is a PID.
TransferMatrix example_reference();

/// Diagonal reference model with one gain-constrained free zero per output.
RefModelSpec diagonal_reference();
/// Block-triangular model that keeps the zero on output 1; matched for PID.
RefModelSpec block_reference();
/// Faster block-triangular model that the PID class cannot match.
RefModelSpec mismatched_reference();

/// eta at which block_reference() is achieved exactly by a PID controller.
ParamEta block_matched_eta();

/// Shared setup: C0 = 0.5 I, PID(2) controller class, PRBS amplitude 1,
/// hold 20, 1260 samples, J^MR steps over 120 samples.
ExperimentConfig diagonal_study();  ///< noise free, 8 starts with spread 0.5
ExperimentConfig block_study();     ///< H0 = I, Lambda = diag(0.04, 0.02)
ExperimentConfig mismatched_study();  ///< H0 = q/(q-0.3) I, same Lambda

}  // namespace ocitune::studies
