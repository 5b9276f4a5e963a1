#pragma once

#include "tempogs/geometry.hpp"
#include "tempogs/image.hpp"

namespace tempogs {

// A posed training or evaluation image.
struct View {
    Camera camera;
    Image image;
};

}  // namespace tempogs
