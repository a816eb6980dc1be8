#include "ocitune/studies.hpp"

#include <vector>

namespace ocitune::studies {

namespace {

RationalFunction over_roots(double gain, std::vector<double> zeros, std::vector<double> poles) {
  return RationalFunction(Polynomial::from_real_roots(zeros, gain), Polynomial::from_real_roots(poles));
}

ExperimentConfig base(std::string name, RefModelSpec reference) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.plant = example_plant();
  c.noise_filter = TransferMatrix::identity(2);
  c.noise_cov = Eigen::MatrixXd::Zero(2, 2);
  c.initial_controller = 0.5 * TransferMatrix::identity(2);
  c.model = OciModel{ControllerStructure::pid(2), std::move(reference)};
  return c;
}

Eigen::MatrixXd study_noise() {
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(2, 2);
  lambda(0, 0) = 0.04;
  lambda(1, 1) = 0.02;
  return lambda;
}

}  // namespace

TransferMatrix example_plant() {
  TransferMatrix g(2);
  g(0, 0) = over_roots(1.0, {0.7}, {0.9, 0.8});
  g(0, 1) = over_roots(2.0, {}, {0.8});
  g(1, 0) = over_roots(1.25, {}, {0.8});
  g(1, 1) = over_roots(1.5, {}, {0.8});
  return g;
}

TransferMatrix example_reference() {
  TransferMatrix t(2);
  t(0, 0) = over_roots(-0.4, {1.2}, {0.6, 0.8});
  t(1, 1) = t(0, 0);
  return t;
}

RefModelSpec diagonal_reference() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(std::vector<double>{0.6, 0.8});
  e(1, 1) = RefEntry::gain_constrained(std::vector<double>{0.6, 0.7});
  return RefModelSpec(RefStructure::Diagonal, e);
}

RefModelSpec block_reference() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(std::vector<double>{0.8, 0.6});
  e(0, 1) = RefEntry::free(Polynomial::from_real_roots(std::vector<double>{0.8, 0.6, 0.75}),
                           Polynomial{1.0, -1.0}, {CoefficientSlot::open(), CoefficientSlot::open()});
  e(1, 1) = RefEntry::fixed(Polynomial{0.25}, Polynomial{1.0, -0.75});
  return RefModelSpec(RefStructure::BlockTriangular, e, 0);
}

RefModelSpec mismatched_reference() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(std::vector<double>{0.6, 0.6});
  e(0, 1) = RefEntry::free(Polynomial::from_real_roots(std::vector<double>{0.6, 0.6, 0.6}),
                           Polynomial{1.0, -1.0},
                           {CoefficientSlot::pinned(1.0), CoefficientSlot::open()});
  e(1, 1) = RefEntry::fixed(Polynomial{0.4}, Polynomial{1.0, -0.6});
  return RefModelSpec(RefStructure::BlockTriangular, e, 0);
}

ParamEta block_matched_eta() {
  ParamEta eta(3);
  eta << -0.4, 1.0, -0.8;
  return eta;
}

ExperimentConfig diagonal_study() {
  ExperimentConfig c = base("diagonal", diagonal_reference());
  // The optimum needs det C to gain two unstable roots; a single start from
  // the default point usually stalls in a spurious basin.
  c.optim.multistart = 8;
  c.optim.multistart_std = 0.5;
  return c;
}

ExperimentConfig block_study() {
  ExperimentConfig c = base("block_triangular", block_reference());
  c.noise_cov = study_noise();
  return c;
}

ExperimentConfig mismatched_study() {
  ExperimentConfig c = base("mismatched", mismatched_reference());
  c.noise_cov = study_noise();
  const RationalFunction h(Polynomial{1.0, 0.0}, Polynomial{1.0, -0.3});
  const std::vector<RationalFunction> d{h, h};
  c.noise_filter = TransferMatrix::diagonal(d);
  return c;
}

}  // namespace ocitune::studies
