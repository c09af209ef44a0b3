#pragma once

#include <string_view>

namespace logbench {

// Built-in copy of config/drain.conf, used when no --drain-config is given.
inline constexpr std::string_view kBuiltinDrainConfig = R"conf(# Drain settings per loghub-2k dataset. Each preprocess match is replaced
# by <*> before parsing. Values follow the loghub benchmark settings.

[default]
depth = 4
similarity_threshold = 0.5
max_children = 100

[HDFS]
depth = 4
similarity_threshold = 0.5
preprocess = blk_-?\d+
preprocess = (\d+\.){3}\d+(:\d+)?

[Hadoop]
depth = 4
similarity_threshold = 0.5
preprocess = (\d+\.){3}\d+

[Spark]
depth = 4
similarity_threshold = 0.5
preprocess = (\d+\.){3}\d+
preprocess = \b[KGTM]?B\b
preprocess = ([\w-]+\.){2,}[\w-]+

[Zookeeper]
depth = 4
similarity_threshold = 0.5
preprocess = (/|)(\d+\.){3}\d+(:\d+)?

[BGL]
depth = 4
similarity_threshold = 0.5
preprocess = core\.\d+

[HPC]
depth = 4
similarity_threshold = 0.5
preprocess = =\d+

[Thunderbird]
depth = 4
similarity_threshold = 0.5
preprocess = (\d+\.){3}\d+

[Windows]
depth = 5
similarity_threshold = 0.7
preprocess = 0x.*?\s

[Linux]
depth = 6
similarity_threshold = 0.39
preprocess = (\d+\.){3}\d+
preprocess = \d{2}:\d{2}:\d{2}

[Android]
depth = 6
similarity_threshold = 0.2
preprocess = (/[\w-]+)+
preprocess = ([\w-]+\.){2,}[\w-]+
preprocess = \b(\-?\+?\d+)\b|\b0[Xx][a-fA-F\d]+\b|\b[a-fA-F\d]{4,}\b

[HealthApp]
depth = 4
similarity_threshold = 0.2

[Apache]
depth = 4
similarity_threshold = 0.5
preprocess = (\d+\.){3}\d+

[Proxifier]
depth = 3
similarity_threshold = 0.6
preprocess = <\d+\ssec
preprocess = ([\w-]+\.)+[\w-]+(:\d+)?
preprocess = \d{2}:\d{2}(:\d{2})*
preprocess = [KGTM]B

[OpenSSH]
depth = 5
similarity_threshold = 0.6
preprocess = (\d+\.){3}\d+
preprocess = ([\w-]+\.){2,}[\w-]+

[OpenStack]
depth = 5
similarity_threshold = 0.5
preprocess = ((\d+\.){3}\d+,?)+
preprocess = /.+?\s
preprocess = \d+

[Mac]
depth = 6
similarity_threshold = 0.7
preprocess = ([\w-]+\.){2,}[\w-]+
)conf";

}  // namespace logbench
