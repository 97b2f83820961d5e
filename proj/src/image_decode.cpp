#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "facetrait/arcface.hpp"

// JPEG/PNG decode is the only OpenCV dependency; kept in its own translation
// unit so everything else links without imgcodecs.

namespace facetrait {

Image decode_image(const std::filesystem::path& path) {
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty()) throw ValidationError("cannot decode image: " + path.string());
    if (mat.depth() != CV_8U) mat.convertTo(mat, CV_8U);

    Image img;
    img.width = static_cast<std::size_t>(mat.cols);
    img.height = static_cast<std::size_t>(mat.rows);
    img.channels = static_cast<std::size_t>(mat.channels());
    if (img.channels == 3)
        cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
    else if (img.channels == 4)
        cv::cvtColor(mat, mat, cv::COLOR_BGRA2RGBA);
    else if (img.channels != 1)
        throw ValidationError("unsupported channel count in " + path.string());

    img.pixels.resize(img.width * img.height * img.channels);
    if (mat.isContinuous()) {
        std::copy(mat.data, mat.data + img.pixels.size(), img.pixels.begin());
    } else {
        for (std::size_t y = 0; y < img.height; ++y)
            std::copy(mat.ptr<std::uint8_t>(static_cast<int>(y)),
                      mat.ptr<std::uint8_t>(static_cast<int>(y)) + img.width * img.channels,
                      img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width * img.channels));
    }
    return img;
}

}  // namespace facetrait
