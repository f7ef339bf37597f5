#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace infgen {

// Error taxonomy shared by every module. Callers can branch on code().
enum class Errc {
    shape_mismatch,
    invalid_argument,
    non_finite,
    not_found,
    corrupt_file,
    io_failure,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

namespace mem {

// Live-byte accounting for activation buffers. The planner's memory_bound()
// is stated in exactly these bytes, so the streaming-render tests can compare
// the instrumented peak against the bound.
inline std::atomic<std::size_t>& live_bytes() {
    static std::atomic<std::size_t> v{0};
    return v;
}

inline std::atomic<std::size_t>& peak_bytes() {
    static std::atomic<std::size_t> v{0};
    return v;
}

inline void on_alloc(std::size_t n) {
    std::size_t cur = live_bytes().fetch_add(n, std::memory_order_relaxed) + n;
    std::size_t p = peak_bytes().load(std::memory_order_relaxed);
    while (cur > p && !peak_bytes().compare_exchange_weak(p, cur, std::memory_order_relaxed)) {
    }
}

inline void on_free(std::size_t n) {
    live_bytes().fetch_sub(n, std::memory_order_relaxed);
}

inline void reset_peak() {
    peak_bytes().store(live_bytes().load());
}

template <class T>
struct CountingAllocator {
    using value_type = T;

    CountingAllocator() = default;
    template <class U>
    CountingAllocator(const CountingAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        on_alloc(n * sizeof(T));
        return static_cast<T*>(::operator new(n * sizeof(T)));
    }
    void deallocate(T* p, std::size_t n) noexcept {
        on_free(n * sizeof(T));
        ::operator delete(p);
    }

    template <class U>
    bool operator==(const CountingAllocator<U>&) const noexcept {
        return true;
    }
};

}  // namespace mem

using FloatBuf = std::vector<float, mem::CountingAllocator<float>>;

// Rank-3 feature map: channel-major, then row-major. All kernels in this
// library read and write this layout with a fixed element order, which is
// what makes patch composition bit-exact.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    FloatBuf data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

    std::size_t size() const { return data.size(); }

    // Keeps capacity; used by the runtime's ping-pong workspace.
    void resize(int c, int h, int w) {
        channels = c;
        height = h;
        width = w;
        data.resize(static_cast<std::size_t>(c) * h * w);
    }

    void reserve_elems(std::size_t n) { data.reserve(n); }

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

inline bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// Layer weights. Kernel sides must be odd so that every feature map keeps a
// well-defined center pixel through the stack.
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<float> values;

    ConvWeights() = default;
    ConvWeights(int oc, int ic, int kh, int kw)
        : out_channels(oc),
          in_channels(ic),
          kernel_h(kh),
          kernel_w(kw),
          values(static_cast<std::size_t>(oc) * ic * kh * kw, 0.0f) {
        if (kh % 2 == 0 || kw % 2 == 0)
            throw Error(Errc::invalid_argument, "ConvWeights: kernel sides must be odd, got " +
                                                    std::to_string(kh) + "x" + std::to_string(kw));
    }

    float& at(int oc, int ic, int ky, int kx) {
        return values[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }
    float at(int oc, int ic, int ky, int kx) const {
        return values[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
    }
};

}  // namespace infgen
