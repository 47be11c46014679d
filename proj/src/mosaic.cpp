#include <deckfuse/error.hpp>
#include <deckfuse/stitcher.hpp>

#include <cmath>
#include <vector>

namespace deckfuse
{

StitchResult stitch_views(std::span<const GeoTaggedView> views, int tau)
{
    if (views.empty())
        throw Error(ErrorCode::EmptyInput, "no views to stitch");

    const GroundPoint tagged_point{0.0, 0.0};
    GroundBox box{0.0, 0.0, 0.0, 0.0};
    for (const auto &view : views)
        box.expand(footprint_box(view.rig, kMaxOrthoRangeHeights * view.rig.h));

    StitchResult result;
    const double gsd = nominal_gsd(views.front().rig);
    result.grid = grid_covering(box, tagged_point, gsd);
    const double anchor_row = result.grid.origin.north / gsd;
    const double anchor_col = (0.0 - result.grid.origin.east) / gsd;
    const GeoPoint anchor = views.front().tag.position();

    std::vector<PlacedImage> placed;
    placed.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i)
    {
        Raster ortho = render_orthophoto(views[i].rig, views[i].image, result.grid);
        if (i == 0)
        {
            result.steps.push_back({"Reference", 0, Similarity2D{}});
            placed.push_back({std::move(ortho), Similarity2D{}});
            continue;
        }

        StitchStep step;
        if (views[i].manual_transform)
        {
            step = {"Manual", 0, *views[i].manual_transform};
        }
        else
        {
            const RegistrationResult reg = register_pair(placed.back().image, ortho, views[i - 1].tag, views[i].tag,
                                                         gsd, anchor, tau);
            step = {std::string(to_string(reg.method)), reg.inlier_count, reg.transform};
        }
        const Similarity2D to_frame = placed.back().to_frame.compose(step.to_previous);
        result.steps.push_back(step);
        placed.push_back({std::move(ortho), to_frame});
    }

    result.map = composite(placed, anchor, anchor_row, anchor_col, gsd);
    return result;
}

} // namespace deckfuse
