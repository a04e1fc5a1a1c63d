"""计算核心：格点、随机场、贪婪格点动物、多边形构造、Potts 模型与标度分析"""
