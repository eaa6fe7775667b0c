#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <span>
#include <string>

#include "amqf/bench.hpp"
#include "amqf/bulk_tcf.hpp"
#include "amqf/error.hpp"
#include "amqf/gqf.hpp"
#include "amqf/tcf.hpp"
#include "amqf/workload.hpp"

namespace py = pybind11;

namespace {

using KeyArray = py::array_t<uint64_t, py::array::c_style | py::array::forcecast>;

std::span<const uint64_t> as_span(const KeyArray& keys) {
  if (keys.ndim() != 1) throw amqf::ParameterError("keys must be a one-dimensional array");
  return {keys.data(), static_cast<size_t>(keys.shape(0))};
}

py::array_t<bool> as_bools(const std::vector<uint8_t>& flags) {
  py::array_t<bool> out(static_cast<py::ssize_t>(flags.size()));
  auto view = out.mutable_unchecked<1>();
  for (size_t i = 0; i < flags.size(); ++i) view(static_cast<py::ssize_t>(i)) = flags[i] != 0;
  return out;
}

py::array_t<uint64_t> as_array(const std::vector<uint64_t>& v) {
  py::array_t<uint64_t> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict to_dict(const amqf::MetricsRecord& r) {
  py::dict d;
  d["filter"] = r.filter;
  d["api"] = r.api;
  d["op"] = r.op;
  d["log_slots"] = r.log_slots;
  d["load_factor"] = r.load_factor;
  d["threads"] = r.threads;
  d["dist"] = r.dist;
  d["seed"] = r.seed;
  d["wall_seconds"] = r.wall_seconds;
  d["ops_per_sec"] = r.ops_per_sec;
  d["fpr"] = r.fpr ? py::object(py::float_(*r.fpr)) : py::object(py::none());
  d["bits_per_item"] = r.bits_per_item;
  return d;
}

}  // namespace

PYBIND11_MODULE(_amqf, m) {
  m.doc() = "Approximate membership and counting filters";

  py::register_exception<amqf::ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<amqf::CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<amqf::InvariantViolation>(m, "InvariantViolation", PyExc_AssertionError);
  py::register_exception<amqf::InputError>(m, "InputError", PyExc_OSError);

  m.def("fingerprint", [](uint64_t key, uint64_t seed, unsigned bits) { return amqf::fingerprint(key, seed, bits).value; },
        py::arg("key"), py::arg("seed"), py::arg("bits"));
  m.def("uniform_keys", [](uint64_t n, uint64_t seed) { return as_array(amqf::uniform_keys(n, seed)); }, py::arg("n"),
        py::arg("seed") = 1);
  m.def("fpr_query_keys", [](uint64_t n, uint64_t seed) { return as_array(amqf::fpr_query_keys(n, seed)); },
        py::arg("n"), py::arg("seed") = 1);

  py::class_<amqf::Tcf>(m, "Tcf")
      .def(py::init([](uint64_t num_blocks, unsigned block_size, unsigned slot_bits, unsigned tag_bits, bool backing,
                       uint64_t seed) {
             amqf::TcfParams p;
             p.num_blocks = num_blocks;
             p.block_size = block_size;
             p.slot_bits = slot_bits;
             p.tag_bits = tag_bits;
             p.backing = backing;
             p.seed = seed;
             return amqf::Tcf::create(p);
           }),
           py::arg("num_blocks"), py::arg("block_size") = 16, py::arg("slot_bits") = 16, py::arg("tag_bits") = 16,
           py::arg("backing") = true, py::arg("seed") = amqf::TcfParams{}.seed)
      .def("insert", [](amqf::Tcf& t, uint64_t key, uint64_t value) { return std::string(to_string(t.insert(key, value))); },
           py::arg("key"), py::arg("value") = 0, "Returns 'primary', 'secondary', 'backing' or 'full'.")
      .def("query", &amqf::Tcf::query, py::arg("key"))
      .def("__contains__", &amqf::Tcf::contains)
      .def("contains", &amqf::Tcf::contains, py::arg("key"))
      .def("erase", &amqf::Tcf::erase, py::arg("key"))
      .def_property_readonly("load_factor", &amqf::Tcf::load_factor)
      .def_property_readonly("capacity", [](const amqf::Tcf& t) { return t.params().capacity(); })
      .def_property_readonly("backing_occupied", &amqf::Tcf::backing_occupied)
      .def("size_in_bits", &amqf::Tcf::size_in_bits)
      .def("validate", &amqf::Tcf::validate);

  py::class_<amqf::BulkTcf>(m, "BulkTcf")
      .def(py::init([](uint64_t num_blocks, unsigned block_size, bool backing, uint64_t seed) {
             amqf::BulkTcfParams p;
             p.num_blocks = num_blocks;
             p.block_size = block_size;
             p.backing = backing;
             p.seed = seed;
             return std::make_unique<amqf::BulkTcf>(p);
           }),
           py::arg("num_blocks"), py::arg("block_size") = 128, py::arg("backing") = true,
           py::arg("seed") = amqf::BulkTcfParams{}.seed)
      .def(
          "bulk_insert",
          [](amqf::BulkTcf& t, const KeyArray& keys, unsigned workers) {
            const amqf::BulkInsertStats s = t.bulk_insert(as_span(keys), workers);
            py::dict d;
            d["direct"] = s.direct;
            d["potc"] = s.potc;
            d["backing"] = s.backing;
            d["failed"] = s.failed;
            return d;
          },
          py::arg("keys"), py::arg("workers") = 1)
      .def(
          "bulk_query",
          [](const amqf::BulkTcf& t, const KeyArray& keys, unsigned workers) {
            return as_bools(t.bulk_query(as_span(keys), workers));
          },
          py::arg("keys"), py::arg("workers") = 1)
      .def("bulk_erase", [](amqf::BulkTcf& t, const KeyArray& keys) { return t.bulk_erase(as_span(keys)); },
           py::arg("keys"))
      .def("__contains__", &amqf::BulkTcf::contains)
      .def("contains", &amqf::BulkTcf::contains, py::arg("key"))
      .def_property_readonly("load_factor", &amqf::BulkTcf::load_factor)
      .def("__len__", &amqf::BulkTcf::items)
      .def("size_in_bits", &amqf::BulkTcf::size_in_bits)
      .def("validate", &amqf::BulkTcf::validate);

  py::class_<amqf::QuotientFilter>(m, "QuotientFilter")
      .def(py::init([](unsigned quotient_bits, unsigned remainder_bits, uint64_t region_slots, double max_load,
                       uint64_t seed) {
             amqf::QfParams p;
             p.quotient_bits = quotient_bits;
             p.remainder_bits = remainder_bits;
             p.region_slots = region_slots;
             p.max_load = max_load;
             p.seed = seed;
             return amqf::QuotientFilter::create(p);
           }),
           py::arg("quotient_bits"), py::arg("remainder_bits") = 8, py::arg("region_slots") = 8192,
           py::arg("max_load") = 0.95, py::arg("seed") = amqf::QfParams{}.seed)
      .def("insert", &amqf::QuotientFilter::insert, py::arg("key"), py::arg("count") = 1)
      .def("count", &amqf::QuotientFilter::count, py::arg("key"))
      .def("__contains__", [](const amqf::QuotientFilter& f, uint64_t key) { return f.count(key) > 0; })
      .def("erase", &amqf::QuotientFilter::erase, py::arg("key"), py::arg("count") = 1)
      .def(
          "bulk_insert", [](amqf::QuotientFilter& f, const KeyArray& keys, unsigned workers) {
            f.bulk_insert(as_span(keys), workers);
          },
          py::arg("keys"), py::arg("workers") = 1)
      .def(
          "bulk_count", [](amqf::QuotientFilter& f, const KeyArray& keys, unsigned workers) {
            f.bulk_count(as_span(keys), workers);
          },
          py::arg("keys"), py::arg("workers") = 1)
      .def(
          "bulk_erase",
          [](amqf::QuotientFilter& f, const KeyArray& keys, unsigned workers) {
            return f.bulk_erase(as_span(keys), workers).removed;
          },
          py::arg("keys"), py::arg("workers") = 1)
      .def("enumerate",
           [](const amqf::QuotientFilter& f) {
             py::list out;
             for (const amqf::ValueCount& vc : f.enumerate()) out.append(py::make_tuple(vc.value, vc.count));
             return out;
           })
      .def_property_readonly("load_factor", &amqf::QuotientFilter::load_factor)
      .def("__len__", &amqf::QuotientFilter::item_count)
      .def("cluster_stats",
           [](const amqf::QuotientFilter& f) {
             const amqf::ClusterStats s = f.cluster_stats();
             py::dict d;
             d["clusters"] = s.clusters;
             d["max"] = s.max;
             d["mean"] = s.mean;
             return d;
           })
      .def("is_blank", &amqf::QuotientFilter::is_blank)
      .def("size_in_bits", &amqf::QuotientFilter::size_in_bits)
      .def("validate", &amqf::QuotientFilter::validate);

  m.def(
      "run_benchmark",
      [](const std::string& filter, const std::string& op, unsigned log_slots, double load, const std::string& dist,
         uint64_t seed, unsigned threads, unsigned reps, std::optional<std::string> mode, bool backing,
         uint64_t items, uint64_t queries) {
        amqf::BenchConfig c;
        c.filter = amqf::parse_filter_kind(filter);
        c.op = amqf::parse_bench_op(op);
        c.log_slots = log_slots;
        c.load = load;
        c.dist = amqf::parse_distribution(dist);
        c.seed = seed;
        c.threads = threads;
        c.reps = reps;
        if (mode) c.mode = amqf::parse_count_mode(*mode);
        c.backing = backing;
        c.items = items;
        c.queries = queries;
        py::list rows;
        for (const amqf::MetricsRecord& r : amqf::run_benchmark(c).records()) rows.append(to_dict(r));
        return rows;
      },
      py::arg("filter") = "tcf", py::arg("op") = "insert", py::arg("log_slots") = 20, py::arg("load") = 0.9,
      py::arg("dist") = "uniform", py::arg("seed") = 1, py::arg("threads") = 1, py::arg("reps") = 3,
      py::arg("mode") = py::none(), py::arg("backing") = true, py::arg("items") = 0,
      py::arg("queries") = 1'000'000,
      "One metrics row per repetition.");
}
