// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 nearfield project contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "nearfield/beamforming.hpp"
#include "nearfield/channel.hpp"
#include "nearfield/config.hpp"
#include "nearfield/errors.hpp"
#include "nearfield/dictionary.hpp"
#include "nearfield/fpn.hpp"
#include "nearfield/geometry.hpp"
#include "nearfield/harness.hpp"
#include "nearfield/measurement.hpp"
#include "nearfield/nn.hpp"

namespace py = pybind11;
using namespace nearfield;

namespace {

Eigen::MatrixXd positions_matrix(const ArrayGeometry& g) {
  Eigen::MatrixXd out(g.size(), 3);
  for (int i = 0; i < g.size(); ++i)
    out.row(i) = g.element_positions[static_cast<std::size_t>(i)].transpose();
  return out;
}

template <typename Model, typename Saver>
py::bytes serialize_with(const Model& model, Saver saver) {
  std::ostringstream os(std::ios::binary);
  saver(os, model);
  return py::bytes(os.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "near-field XL-MIMO transceiver algorithms (C++ core)";

  py::register_exception<InvalidArgument>(m, "InvalidArgumentError",
                                          PyExc_ValueError);
  py::register_exception<InvalidState>(m, "InvalidStateError",
                                       PyExc_RuntimeError);
  py::register_exception<IllConditioned>(m, "IllConditionedError",
                                         PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericErrorError",
                                       PyExc_RuntimeError);
  py::register_exception<TrainingFailure>(m, "TrainingFailureError",
                                          PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigFileError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataFileError", PyExc_ValueError);

  // geometry
  py::enum_<ArrayKind>(m, "ArrayKind")
      .value("ULA", ArrayKind::Ula)
      .value("UPA", ArrayKind::Upa);
  py::class_<ArrayGeometry>(m, "ArrayGeometry")
      .def_readonly("wavelength", &ArrayGeometry::wavelength)
      .def_readonly("aperture", &ArrayGeometry::aperture)
      .def_readonly("kind", &ArrayGeometry::kind)
      .def_property_readonly("n", &ArrayGeometry::size)
      .def_property_readonly("element_positions", &positions_matrix);
  m.def("build_ula", &build_ula, py::arg("n"), py::arg("spacing"),
        py::arg("wavelength"));
  m.def("build_upa", &build_upa, py::arg("nx"), py::arg("ny"),
        py::arg("spacing"), py::arg("wavelength"));
  m.def("rayleigh_distance", &rayleigh_distance);
  m.def("steer_far", &steer_far, py::arg("geometry"), py::arg("azimuth"),
        py::arg("elevation") = 0.0);
  m.def("steer_near", &steer_near, py::arg("geometry"), py::arg("azimuth"),
        py::arg("elevation"), py::arg("distance"));

  // channel
  py::enum_<GainModel>(m, "GainModel")
      .value("UNIT", GainModel::Unit)
      .value("COMPLEX_GAUSSIAN", GainModel::ComplexGaussian);
  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &ChannelConfig::n_users)
      .def_readwrite("paths_per_user", &ChannelConfig::paths_per_user)
      .def_readwrite("near_fraction", &ChannelConfig::near_fraction)
      .def_readwrite("distance_min", &ChannelConfig::distance_min)
      .def_readwrite("distance_max", &ChannelConfig::distance_max)
      .def_readwrite("gain_model", &ChannelConfig::gain_model)
      .def_readwrite("non_stationary", &ChannelConfig::non_stationary)
      .def_readwrite("visible_region_len", &ChannelConfig::visible_region_len);
  py::class_<ChannelRealization>(m, "ChannelRealization")
      .def_readonly("matrix", &ChannelRealization::matrix)
      .def_property_readonly("n_users", [](const ChannelRealization& c) {
        return static_cast<int>(c.matrix.cols());
      });
  m.def("sample_channel", &sample_channel, py::arg("geometry"),
        py::arg("config"), py::arg("seed"));

  // dictionary
  py::class_<PolarDictionary>(m, "PolarDictionary")
      .def_readonly("atoms", &PolarDictionary::atoms)
      .def_property_readonly("n_atoms", &PolarDictionary::n_atoms);
  m.def("build_far_dictionary", &build_far_dictionary, py::arg("geometry"),
        py::arg("n_angles"));
  m.def("build_polar_dictionary", &build_polar_dictionary, py::arg("geometry"),
        py::arg("n_angles"), py::arg("n_rings"), py::arg("rho_min"));
  m.def("mutual_coherence", &mutual_coherence);
  m.def(
      "omp",
      [](const CVec& y, const PolarDictionary& d, int sparsity) {
        OmpResult r = omp(y, d, sparsity);
        return py::make_tuple(r.support, r.coefficients);
      },
      py::arg("y"), py::arg("dictionary"), py::arg("sparsity"));

  // measurement
  py::enum_<SensingKind>(m, "SensingKind")
      .value("GAUSSIAN", SensingKind::Gaussian)
      .value("UNIT_MODULUS", SensingKind::UnitModulus);
  py::enum_<Quantizer>(m, "Quantizer")
      .value("NONE", Quantizer::None)
      .value("ONE_BIT", Quantizer::OneBit);
  py::class_<MeasurementSpec>(m, "MeasurementSpec")
      .def_readonly("sensing", &MeasurementSpec::sensing)
      .def_readwrite("noise_var", &MeasurementSpec::noise_var)
      .def_readwrite("quantizer", &MeasurementSpec::quantizer)
      .def_readonly("compression_ratio", &MeasurementSpec::compression_ratio)
      .def_property_readonly("m", &MeasurementSpec::m)
      .def_property_readonly("n", &MeasurementSpec::n);
  m.def("build_sensing", &build_sensing, py::arg("geometry"), py::arg("m"),
        py::arg("kind"), py::arg("seed"));
  m.def("observe", &observe, py::arg("spec"), py::arg("h"), py::arg("seed"));
  m.def("snr_to_noise_var", &snr_to_noise_var, py::arg("snr_db"),
        py::arg("signal_power"));
  m.def("bussgang_gain", &bussgang_gain, py::arg("spec"),
        py::arg("signal_var"));

  // fpn
  py::class_<FixedPointTrace>(m, "FixedPointTrace")
      .def_readonly("residuals", &FixedPointTrace::residuals)
      .def_readonly("iterations_used", &FixedPointTrace::iterations_used)
      .def_readonly("converged", &FixedPointTrace::converged);
  py::class_<EstimatorOutput>(m, "EstimatorOutput")
      .def_readonly("h_hat", &EstimatorOutput::h_hat)
      .def_readonly("trace", &EstimatorOutput::trace);
  py::class_<FpnTrainConfig>(m, "FpnTrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &FpnTrainConfig::epochs)
      .def_readwrite("batch", &FpnTrainConfig::batch)
      .def_readwrite("lr", &FpnTrainConfig::lr)
      .def_readwrite("tol", &FpnTrainConfig::tol)
      .def_readwrite("max_iter", &FpnTrainConfig::max_iter)
      .def_readwrite("neumann_k", &FpnTrainConfig::neumann_k)
      .def_readwrite("lip_budget", &FpnTrainConfig::lip_budget)
      .def_readwrite("seed", &FpnTrainConfig::seed)
      .def_readwrite("hidden_mult", &FpnTrainConfig::hidden_mult);
  py::class_<FpnModel>(m, "FpnModel")
      .def_readonly("gamma", &FpnModel::gamma)
      .def_readonly("lip_budget", &FpnModel::lip_budget)
      .def_readonly("n_antennas", &FpnModel::n_antennas)
      .def_readonly("n_measurements", &FpnModel::n_measurements)
      .def("to_bytes", [](const FpnModel& model) {
        return serialize_with(model, [](std::ostream& os, const FpnModel& mm) {
          save_fpn_model(os, mm);
        });
      });
  m.def("make_fpn_model", &make_fpn_model, py::arg("spec"), py::arg("config"));
  m.def("fpn_model_from_bytes", [](const py::bytes& blob) {
    std::istringstream is(std::string(blob), std::ios::binary);
    return load_fpn_model(is);
  });
  m.def("le_step", &le_step, py::arg("spec"), py::arg("y"), py::arg("x"),
        py::arg("gamma"));
  m.def("nle_soft_threshold", &nle_soft_threshold, py::arg("r"),
        py::arg("lambda_"));
  m.def("fpn_iteration", &fpn_iteration, py::arg("model"), py::arg("spec"),
        py::arg("y"), py::arg("x"));
  m.def(
      "solve_fixed_point",
      [](const FpnModel& model, const MeasurementSpec& spec, const CVec& y,
         const CVec& x0, double tol, int max_iter) {
        return solve_fixed_point(model, spec, y, x0, tol, max_iter);
      },
      py::arg("model"), py::arg("spec"), py::arg("y"), py::arg("x0"),
      py::arg("tol") = 1e-4, py::arg("max_iter") = 64);
  m.def(
      "train_fpn",
      [](const std::vector<std::tuple<MeasurementSpec, CVec, CVec>>& data,
         const FpnTrainConfig& cfg) {
        std::vector<MeasurementSpec> specs;
        specs.reserve(data.size());
        for (const auto& [spec, y, h] : data) specs.push_back(spec);
        std::vector<FpnSample> samples(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
          samples[i] = {&specs[i], std::get<1>(data[i]), std::get<2>(data[i])};
        FpnTrainResult r = train_fpn(samples, cfg);
        return py::make_tuple(r.model, r.loss_history);
      },
      py::arg("dataset"), py::arg("config"));
  m.def("estimate_ls", &estimate_ls, py::arg("spec"), py::arg("y"));
  m.def("estimate_oamp_soft", &estimate_oamp_soft, py::arg("spec"),
        py::arg("y"), py::arg("lambda_"), py::arg("tol") = 1e-4,
        py::arg("max_iter") = 64);
  m.def("nmse_db", &nmse_db, py::arg("h_hat"), py::arg("h_true"));

  // beamforming
  py::class_<MultiUserChannel>(m, "MultiUserChannel")
      .def(py::init([](const CMat& h, double noise_power, double power_budget) {
             return MultiUserChannel{h, noise_power, power_budget};
           }),
           py::arg("h"), py::arg("noise_power"), py::arg("power_budget"))
      .def_readwrite("h", &MultiUserChannel::h)
      .def_readwrite("noise_power", &MultiUserChannel::noise_power)
      .def_readwrite("power_budget", &MultiUserChannel::power_budget)
      .def_property_readonly("n_users", &MultiUserChannel::n_users)
      .def_property_readonly("n_antennas", &MultiUserChannel::n_antennas);
  py::class_<Beamformer>(m, "Beamformer").def_readonly("w", &Beamformer::w);
  py::enum_<NcBasis>(m, "NcBasis")
      .value("ZF", NcBasis::Zf)
      .value("MRT", NcBasis::Mrt);
  py::class_<NcModel>(m, "NcModel")
      .def_readonly("basis", &NcModel::basis)
      .def_readonly("n_antennas", &NcModel::n_antennas)
      .def("to_bytes", [](const NcModel& model) {
        return serialize_with(model, [](std::ostream& os, const NcModel& mm) {
          save_nc_model(os, mm);
        });
      });
  m.def("nc_model_from_bytes", [](const py::bytes& blob) {
    std::istringstream is(std::string(blob), std::ios::binary);
    return load_nc_model(is);
  });
  py::class_<NcTrainConfig>(m, "NcTrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &NcTrainConfig::epochs)
      .def_readwrite("batch", &NcTrainConfig::batch)
      .def_readwrite("lr", &NcTrainConfig::lr)
      .def_readwrite("seed", &NcTrainConfig::seed)
      .def_readwrite("hidden_mult", &NcTrainConfig::hidden_mult);
  m.def("zf_beamformer", &zf_beamformer);
  m.def("mrt_beamformer", &mrt_beamformer);
  m.def("sum_rate", &sum_rate, py::arg("channel"), py::arg("beamformer"));
  m.def(
      "wmmse",
      [](const MultiUserChannel& ch, int iters, double bisect_tol) {
        WmmseResult r = wmmse(ch, iters, bisect_tol);
        return py::make_tuple(r.beamformer, r.rates);
      },
      py::arg("channel"), py::arg("iters"), py::arg("bisect_tol") = 1e-10);
  m.def("make_nc_model", &make_nc_model, py::arg("n_antennas"),
        py::arg("config"), py::arg("basis") = NcBasis::Zf);
  m.def("nc_calibrate", &nc_calibrate, py::arg("model"), py::arg("channel"));
  m.def("nc_beamformer", &nc_beamformer, py::arg("model"), py::arg("channel"));
  m.def(
      "train_nc",
      [](const std::vector<MultiUserChannel>& data, const NcTrainConfig& cfg) {
        NcTrainResult r = train_nc(data, cfg);
        return py::make_tuple(r.model, r.objective_history);
      },
      py::arg("dataset"), py::arg("config"));

  // harness
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("scenario", &ExperimentConfig::scenario);
  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("json_text"));
  m.def("config_to_json", &config_to_json, py::arg("config"));
}
