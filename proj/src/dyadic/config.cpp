#include "dyadic/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dyt1 {

int RunConfig::effective_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("DYADIC_T1_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

std::string RunConfig::canonical_json() const {
    nlohmann::json j;
    j["kernel"] = kernel;
    j["n1"] = n1;
    j["n2"] = n2;
    j["N"] = N;
    j["M"] = M;
    j["quad"] = {{"order", quad.order}, {"tol", quad.tol}, {"depth", quad.max_depth},
                 {"sigma", quad.sigma}};
    j["sweep"] = {{"kmax", sweep.kmax}, {"jmax", sweep.jmax}, {"mmax", sweep.mmax},
                  {"lmin", sweep.lmin}, {"lmax", sweep.lmax}};
    j["out"] = out;
    j["seed"] = seed;
    j["cmax"] = cmax;
    j["cond_cmax"] = cond_cmax;
    j["only"] = only;
    j["theta"] = theta;
    j["Lmax"] = Lmax;
    return j.dump();
}

uint64_t RunConfig::hash() const {
    // FNV-1a
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string RunConfig::header(const std::string& tool) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return "# dyadic-t1 " + tool + "\n# config=" + canonical_json() + "\n# config_hash=" + buf +
           "\n";
}

KernelModel RunConfig::load_kernel_named(const std::string& name) const {
    KernelModel K;
    if (name == "compact_model" || name == "tensor_hilbert" || name == "zero")
        K = KernelModel::builtin(name);
    else
        K = KernelModel::from_json_file(name);
    K.theta = theta;
    K.n1 = n1;
    K.n2 = n2;
    return K;
}

KernelModel RunConfig::load_kernel() const { return load_kernel_named(kernel); }

void RunConfig::validate() const {
    if (n1 != 1 || n2 != 1)
        throw std::invalid_argument("config: kernel pipelines run with n1 = n2 = 1 "
                                    "(grid counting supports n = 2)");
    if (N < 1 || M < 1 || M < N) throw std::invalid_argument("config: need 1 <= N <= M");
    if (quad.order < 2) throw std::invalid_argument("config: quad order >= 2");
    if (!(quad.tol > 0)) throw std::invalid_argument("config: quad tol > 0");
    if (!(quad.sigma > 0 && quad.sigma < 1))
        throw std::invalid_argument("config: grading ratio in (0,1)");
    if (sweep.kmax < 0 || sweep.jmax < 1 || sweep.mmax < 1)
        throw std::invalid_argument("config: bad sweep ranges");
}

void write_text_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename temporary output to '" + path + "'");
}

}  // namespace dyt1
