#include "fbsde/error.hpp"
#include "fbsde/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace fbsde::kernels {

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(FBSDE_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!isa_supported(isa)) {
        throw InvalidArgument("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
    }
#if defined(FBSDE_HAVE_AVX2)
    if (isa == Isa::avx2) return detail::avx2_table;
#endif
    return detail::scalar_table;
}

std::string_view isa_name(Isa isa) noexcept {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

namespace {

const KernelTable* initial_table() {
    if (const char* env = std::getenv("FBSDE_ISA")) {
        const std::string_view requested(env);
        if (requested == "scalar") return &detail::scalar_table;
        if (requested == "avx2" && isa_supported(Isa::avx2)) return &table(Isa::avx2);
    }
    return isa_supported(Isa::avx2) ? &table(Isa::avx2) : &detail::scalar_table;
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{initial_table()};
    return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) { active_slot().store(&table(isa), std::memory_order_relaxed); }

}  // namespace fbsde::kernels
