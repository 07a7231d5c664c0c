#pragma once

#include <vector>

// Generated by tests/oracles/freeze_stats.py.
namespace oracle {

inline const std::vector<double> kFoldsA = {0.6958, 0.6896, 0.703, 0.6642, 0.7057, 0.6936, 0.6855, 0.702, 0.661, 0.6968, 0.6854, 0.7082, 0.7088, 0.6814, 0.6813, 0.6706, 0.6842, 0.7064, 0.7171, 0.7046};
inline const std::vector<double> kFoldsB = {0.6863, 0.6666, 0.6959, 0.642, 0.6993, 0.6806, 0.6883, 0.695, 0.6715, 0.6807, 0.6867, 0.7016, 0.7242, 0.642, 0.6844, 0.6452, 0.6612, 0.6961, 0.6844, 0.6767};
inline const std::vector<double> kFoldsExp = {1.7196, 2.2003, 0.3147, 0.4735, 1.6663, 1.4998, 1.5705, 1.8631, 0.4864, 1.4393, 0.236, 0.1831, 0.0573, 0.0636, 2.6426, 2.34, 0.7787, 0.4903, 5.0467, 1.5384};
inline constexpr double kShapiroA[2] = {0.9515977961001015, 0.39199689147467415};
inline constexpr double kShapiroB[2] = {0.9416322115876966, 0.2573860437197852};
inline constexpr double kShapiroExp[2] = {0.8496022923059245, 0.005249149758242094};
inline constexpr double kPairedAB[2] = {3.6563934842528782, 0.0016785121681822494};
inline constexpr double kWelchAB[2] = {2.0222351372067724, 0.050870218876941604};
inline constexpr double kPairedAExp[2] = {-2.3913312367976967, 0.027292439273526772};
inline constexpr double kShapiroQuantiles[2] = {0.993332938308796, 0.9999007805039322};
inline const std::vector<double> kSkewed50 = {0.0621, 0.7755, 0.021, 1.5052, 0.089, 0.6752, 1.633, 0.4185, 0.0173, 6.271, 0.1374, 2.8528, 0.0771, 0.6632, 0.1965, 0.2111, 4.0796, 0.224, 0.5346, 0.0047, 0.269, 0.0742, 0.0005, 5.4077, 0.0031, 3.0547, 0.0648, 0.0065, 0.0034, 0.7683, 0.0065, 0.0644, 21.1506, 3.4883, 1.7515, 2.7428, 3.5603, 0.0123, 7.6849, 0.0904, 0.3872, 2.6036, 0.5117, 0.1402, 0.2459, 0.0186, 2.027, 1.9599, 0.0022, 4.6191};
inline constexpr double kShapiroSkewed50[2] = {0.5133798508154763, 1.226053624971946e-11};
inline const std::vector<double> kSmall3 = {0.1627, 1.2383, -0.4564};
inline constexpr double kShapiroSmall3[2] = {0.9763845859352068, 0.7053384306213777};
inline const std::vector<double> kSmall4 = {0.0501, 1.4001, -1.2583, 0.1925};
inline constexpr double kShapiroSmall4[2] = {0.9658515700502721, 0.8156503064741949};
inline const std::vector<double> kSmall5 = {0.9753, -1.0635, -0.6997, -1.2499, 1.1808};
inline constexpr double kShapiroSmall5[2] = {0.8254390497904303, 0.12851879287979012};
inline const std::vector<double> kSmall7 = {-0.1894, -0.3152, -1.4125, -1.0638, 0.9265, -0.1895, -0.4009};
inline constexpr double kShapiroSmall7[2] = {0.925416545749841, 0.51262725501942};
inline const std::vector<double> kSmall11 = {0.7919, -0.9059, 1.6134, -0.3682, -0.513, -0.2652, 0.0373, 0.7012, -0.6988, -0.824, 0.0382};
inline constexpr double kShapiroSmall11[2] = {0.9108748186714256, 0.24977359119448483};
inline const std::vector<double> kSmall12 = {0.3389, 0.8773, -0.4768, 0.967, -1.0199, 1.3858, -1.0921, -0.0863, 0.1953, 1.0132, 1.4602, 0.0492};
inline constexpr double kShapiroSmall12[2] = {0.9389388702439451, 0.48444883300907166};

}  // namespace oracle
