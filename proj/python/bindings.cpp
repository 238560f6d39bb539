#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "taskseq/eval.hpp"
#include "taskseq/serialize.hpp"

namespace py = pybind11;
using namespace taskseq;

namespace {

std::vector<SequenceExample> parse_lines(const std::vector<std::string>& lines) {
    std::vector<SequenceExample> out;
    for (std::size_t i = 0; i < lines.size(); ++i) out.push_back(example_from_line(lines[i], i + 1));
    return out;
}

}  // namespace

PYBIND11_MODULE(_taskseq, m) {
    m.doc() = "task sequencing core (JSON in, JSON out)";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    // translators run newest first, so the subclass goes last
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.attr("dimension") = layout::kDimension;

    m.def("block_names", [] {
        std::vector<std::string> names;
        for (const auto& b : layout::kBlocks) names.emplace_back(b.name);
        return names;
    });

    m.def(
        "generate_corpus",
        [](std::uint64_t seed, int n_sequences) {
            GeneratorConfig g;
            g.seed = seed;
            if (n_sequences > 0) g.n_sequences = n_sequences;
            std::vector<std::string> lines;
            for (const auto& ex : generate_corpus(g)) lines.push_back(example_to_line(ex));
            return lines;
        },
        py::arg("seed") = GeneratorConfig{}.seed, py::arg("n_sequences") = 0);

    m.def("corpus_hash", [](const std::vector<std::string>& lines) { return corpus_hash(parse_lines(lines)); });

    m.def(
        "train",
        [](const std::vector<std::string>& lines, double C, double epsilon, int max_iterations) {
            TrainConfig tc;
            tc.C = C;
            tc.epsilon = epsilon;
            tc.max_iterations = max_iterations;
            const auto corpus = parse_lines(lines);
            TrainResult r;
            {
                py::gil_scoped_release nogil;
                r = train(corpus, tc);
            }
            return py::make_tuple(r.w, r.report.iterations, r.report.converged);
        },
        py::arg("lines"), py::arg("C") = TrainConfig{}.C, py::arg("epsilon") = TrainConfig{}.epsilon,
        py::arg("max_iterations") = TrainConfig{}.max_iterations);

    m.def(
        "rollout",
        [](const std::vector<double>& w, const std::string& line, int max_steps) {
            const auto ex = example_from_line(line);
            RolloutOptions ro;
            ro.max_steps = max_steps;
            nlohmann::json out;
            try {
                const auto r = rollout(w, ex.initial_state, ex.task, ro);
                for (const auto& a : r.actions) out["actions"].push_back(a.to_string());
                out["goal_satisfied"] = task_goal_satisfied(r.final_state, ex.task);
            } catch (const RolloutAborted& e) {
                for (const auto& a : e.partial()) out["actions"].push_back(a.to_string());
                out["error"] = e.what();
            }
            return out.dump();
        },
        py::arg("weights"), py::arg("line"), py::arg("max_steps") = 25);

    m.def(
        "proposals",
        [](const std::vector<double>& w, const std::string& line, std::size_t k) {
            const auto ex = example_from_line(line);
            nlohmann::json out = nlohmann::json::array();
            for (const auto& s : executable_top_k(w, ex.initial_state, ex.initial_state, ex.task, {}, k))
                out.push_back({{"action", s.action.to_string()}, {"score", s.score}});
            return out.dump();
        },
        py::arg("weights"), py::arg("line"), py::arg("k") = 3);

    m.def(
        "cross_validate",
        [](const std::vector<std::string>& lines, int folds, std::uint64_t seed, double C) {
            CvConfig c;
            c.folds = folds;
            c.seed = seed;
            c.train.C = C;
            const auto corpus = parse_lines(lines);
            MetricsReport r;
            {
                py::gil_scoped_release nogil;
                r = cross_validate(corpus, c);
            }
            return r.to_json().dump();
        },
        py::arg("lines"), py::arg("folds") = 6, py::arg("seed") = 0, py::arg("C") = TrainConfig{}.C);
}
