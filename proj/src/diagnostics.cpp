#include "smds/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace smds {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& current_sink() {
    static WarningSink sink;
    return sink;
}

}  // namespace

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(sink_mutex());
    auto& sink = current_sink();
    if (sink) {
        sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard<std::mutex> lock(sink_mutex());
    WarningSink previous = std::move(current_sink());
    current_sink() = std::move(sink);
    return previous;
}

ScopedWarningCapture::ScopedWarningCapture()
    : previous_(set_warning_sink([this](const std::string& m) { messages_.push_back(m); })) {}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_sink(std::move(previous_)); }

bool ScopedWarningCapture::contains(const std::string& needle) const {
    for (const auto& m : messages_) {
        if (m.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace smds
