#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmatwin/calibration.hpp"
#include "dmatwin/codebook.hpp"
#include "dmatwin/control_proto.hpp"
#include "dmatwin/dvb/link.hpp"
#include "dmatwin/dvb/reed_solomon.hpp"
#include "dmatwin/em_model.hpp"

namespace py = pybind11;
using namespace dmatwin;

namespace {

em::CodeWord to_code(const py::object& o, std::size_t n) {
  if (py::isinstance<py::str>(o)) return em::CodeWord::from_string(o.cast<std::string>());
  return em::CodeWord(o.cast<std::uint32_t>(), n);
}

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes from_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

}  // namespace

PYBIND11_MODULE(_dmatwin, m) {
  m.doc() = "Software twin of a 16-element binary-coded metasurface antenna testbed";

  py::class_<em::GuideGeometry>(m, "GuideGeometry")
      .def(py::init<>())
      .def_readwrite("n_elements", &em::GuideGeometry::n_elements)
      .def_readwrite("spacing_d", &em::GuideGeometry::spacing_d)
      .def_readwrite("eps_eff", &em::GuideGeometry::eps_eff);

  py::class_<em::ElementModel>(m, "ElementModel")
      .def(py::init<>())
      .def_readwrite("f0", &em::ElementModel::f0)
      .def_readwrite("coupling_F", &em::ElementModel::coupling_F)
      .def_readwrite("damping_gamma", &em::ElementModel::damping_gamma)
      .def_readwrite("off_leakage_rho", &em::ElementModel::off_leakage_rho);

  m.def("calibrated_geometry", &em::calibrated_geometry);
  m.def("calibrated_element", &em::calibrated_element);

  py::class_<em::BeamSummary>(m, "BeamSummary")
      .def_readonly("mld_deg", &em::BeamSummary::mld_deg)
      .def_readonly("peak_dbi", &em::BeamSummary::peak_dbi)
      .def_readonly("hpbw_deg", &em::BeamSummary::hpbw_deg)
      .def_readonly("sll_db", &em::BeamSummary::sll_db)
      .def_readonly("n_beams", &em::BeamSummary::n_beams)
      .def_property_readonly("lobes_deg", [](const em::BeamSummary& s) {
        std::vector<double> v;
        for (const auto& l : s.lobes) v.push_back(l.angle_deg);
        return v;
      });

  m.def(
      "pattern",
      [](const py::object& code, std::optional<em::GuideGeometry> geom, std::optional<em::ElementModel> elem,
         double frequency, double step_deg) {
        const auto g = geom.value_or(em::calibrated_geometry());
        const auto e = elem.value_or(em::calibrated_element());
        const auto grid = em::angle_grid(-90.0, 90.0, step_deg);
        const auto cut = em::array_pattern(g, e, to_code(code, g.n_elements), frequency, grid);
        return py::make_tuple(py::array_t<double>(cut.azimuth_deg.size(), cut.azimuth_deg.data()),
                              py::array_t<double>(cut.directivity_dbi.size(), cut.directivity_dbi.data()));
      },
      py::arg("code"), py::arg("geometry") = py::none(), py::arg("element") = py::none(),
      py::arg("frequency") = em::kDesignFrequency, py::arg("step_deg") = 0.25,
      "Directivity cut (angles_deg, dbi) for a code given as a bit string or integer.");

  m.def(
      "beam_summary",
      [](const py::object& code, std::optional<em::GuideGeometry> geom, std::optional<em::ElementModel> elem,
         double frequency) {
        const auto g = geom.value_or(em::calibrated_geometry());
        const auto e = elem.value_or(em::calibrated_element());
        const auto cut = em::array_pattern(g, e, to_code(code, g.n_elements), frequency, em::default_grid());
        return em::beam_summary(cut);
      },
      py::arg("code"), py::arg("geometry") = py::none(), py::arg("element") = py::none(),
      py::arg("frequency") = em::kDesignFrequency);

  m.def("fspl_db", &dvb::fspl_db, py::arg("distance_m"), py::arg("frequency_hz"));
  m.def(
      "net_throughput_bps",
      [](double symbol_rate, double code_rate) {
        dvb::LinkConfig c;
        c.symbol_rate = symbol_rate;
        c.code_rate = code_rate;
        return dvb::net_throughput_bps(c);
      },
      py::arg("symbol_rate") = 2e6, py::arg("code_rate") = 5.0 / 6.0);

  m.def(
      "simulate_link",
      [](const py::bytes& payload, double snr_db, std::uint64_t seed) {
        dvb::LinkConfig c;
        const auto data = to_bytes(payload);
        const auto r = dvb::simulate_chain(c, data, dvb::es_n0_from_snr_db(c, snr_db), seed);
        py::dict d;
        d["prefec_ber"] = r.prefec_ber;
        d["postfec_ber"] = r.postfec_ber;
        d["evm_pct"] = r.evm_pct;
        d["recovered"] = r.payload_recovered;
        d["payload"] = from_bytes(r.recovered_payload);
        return d;
      },
      py::arg("payload"), py::arg("snr_db"), py::arg("seed") = 1,
      "Runs the full DVB-S chain over AWGN at an SNR measured in the occupied bandwidth.");

  m.def("rs_encode", [](const py::bytes& b) { return from_bytes(dvb::rs_encode(to_bytes(b))); });
  m.def("rs_decode", [](const py::bytes& b) {
    const auto r = dvb::rs_decode(to_bytes(b));
    return py::make_tuple(from_bytes(r.data), r.corrected, r.uncorrectable);
  });

  m.def(
      "parse_code_text",
      [](const std::string& text, const std::string& radix) {
        proto::Radix r;
        if (radix == "bin") r = proto::Radix::Bin;
        else if (radix == "hex") r = proto::Radix::Hex;
        else if (radix == "dec") r = proto::Radix::Dec;
        else throw py::value_error("radix must be bin, hex or dec");
        return proto::parse_code_text(text, r).value();
      },
      py::arg("text"), py::arg("radix"));

  m.def("encode_set_code", [](std::uint16_t code) { return from_bytes(proto::encode(proto::SetCode{code})); });
  m.def("encode_code_list",
        [](const std::vector<std::uint16_t>& codes) { return from_bytes(proto::encode(proto::SetCodeList{codes})); });
  m.def("encode_switch_interval",
        [](std::uint32_t ticks) { return from_bytes(proto::encode(proto::SetSwitchInterval{ticks})); });
  m.def("encode_multi_mode",
        [](bool multi) { return from_bytes(proto::encode(proto::SetMode{multi ? proto::Mode::Multi : proto::Mode::Single})); });
  m.def("encode_steering_enable",
        [](bool on) { return from_bytes(proto::encode(proto::SteeringEnable{on})); });

  m.def(
      "decode_status",
      [](const py::bytes& b) {
        const auto data = to_bytes(b);
        const auto r = proto::decode(data);
        return py::make_tuple(std::string(proto::to_string(r.status)), r.consumed);
      },
      "Status name and consumed byte count for the first frame in a byte string.");

  m.def(
      "emulate",
      [](const py::bytes& b, std::uint64_t ticks) {
        const auto data = to_bytes(b);
        const auto step = proto::emulator_step(proto::EmulatorState{}, data, ticks);
        std::vector<std::pair<std::uint64_t, std::uint16_t>> words;
        for (const auto& e : step.timeline)
          if (e.kind == proto::TimelineEvent::Kind::Word) words.emplace_back(e.tick, e.radiation_word);
        return words;
      },
      py::arg("stream"), py::arg("ticks"), "Radiation-word timeline [(tick, word)] from the power-on state.");

  m.def("switching_rate_ratio", [](std::uint64_t ticks, double rs) { return proto::switching_rate_check(ticks, rs).ratio; });
}
